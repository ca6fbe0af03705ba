#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visa/geom.hpp"
#include "visa/textmatch.hpp"

namespace visa::corpus {

enum class ElementClass { title, text, list, table, figure };
enum class Category { passage, passage_first_page, passage_beyond_first_page, non_passage };
enum class Split { train, test };

std::string to_string(ElementClass c);
std::string to_string(Category c);
std::string to_string(Split s);
ElementClass element_class_from_string(const std::string& s);
Category category_from_string(const std::string& s);
Split split_from_string(const std::string& s);

/// Screenshot backing a corpus document.
struct DocumentImage {
    std::string doc_id;
    int width = 0;
    int height = 0;
    int page_height = 980;
    std::string image_path;  // relative to the dataset directory
    std::optional<std::string> source_url;

    geom::ImageDims dims() const { return {width, height, page_height}; }
};

struct AttributionExample {
    std::string example_id;
    std::string query;
    textmatch::AnswerSet answers;
    std::string gold_doc_id;
    geom::BBox gold_bbox;
    Category category = Category::passage;
    Split split = Split::train;
};

struct LayoutRecord {
    std::string doc_id;
    geom::BBox element_bbox;
    ElementClass element_class = ElementClass::text;
};

struct DatasetStats {
    std::map<Split, int> per_split;
    std::map<Category, int> per_category;
    int total = 0;
};

struct Issue {
    std::string file;
    int line = 0;  // 1-based line within the file, 0 when not line-scoped
    std::string message;
};

struct Dataset {
    std::filesystem::path root;
    std::map<std::string, DocumentImage> docs;
    std::vector<AttributionExample> examples;

    const DocumentImage& doc(const std::string& doc_id) const;
};

struct LoadOptions {
    bool require_image_files = true;
    // Decode every image and check it matches the declared width x height.
    // Off by default: it reads every file.
    bool verify_image_dims = false;
};

struct LoadResult {
    Dataset dataset;
    std::vector<Issue> issues;
    bool ok() const { return issues.empty(); }
};

/// Load documents.jsonl + examples.jsonl from a dataset directory,
/// validating every record. Invalid records are reported with their line
/// numbers and excluded from the returned dataset.
LoadResult load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {});

/// Write a dataset's manifests back out. Field-for-field inverse of load.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Parse a COCO-style object-detection annotation file (images /
/// annotations / categories, xywh boxes) into layout records.
std::vector<LayoutRecord> ingest_layout(const std::filesystem::path& path);

Category assign_category(ElementClass element_class, const geom::BBox& bbox,
                         const geom::ImageDims& dims, bool multi_page);

DatasetStats dataset_stats(const Dataset& ds);

// JSON wire forms. BBox serializes as [[x1,y1],[x2,y2]].
nlohmann::json bbox_to_json(const geom::BBox& b);
geom::BBox bbox_from_json(const nlohmann::json& j);
nlohmann::json example_to_json(const AttributionExample& ex);
AttributionExample example_from_json(const nlohmann::json& j);
nlohmann::json document_to_json(const DocumentImage& d);
DocumentImage document_from_json(const nlohmann::json& j);

}  // namespace visa::corpus
