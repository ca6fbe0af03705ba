#include "visa/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

namespace visa::corpus {

using nlohmann::json;

std::string to_string(ElementClass c) {
    switch (c) {
        case ElementClass::title: return "title";
        case ElementClass::text: return "text";
        case ElementClass::list: return "list";
        case ElementClass::table: return "table";
        case ElementClass::figure: return "figure";
    }
    return "?";
}

std::string to_string(Category c) {
    switch (c) {
        case Category::passage: return "passage";
        case Category::passage_first_page: return "passage_first_page";
        case Category::passage_beyond_first_page: return "passage_beyond_first_page";
        case Category::non_passage: return "non_passage";
    }
    return "?";
}

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

ElementClass element_class_from_string(const std::string& s) {
    if (s == "title") return ElementClass::title;
    if (s == "text") return ElementClass::text;
    if (s == "list") return ElementClass::list;
    if (s == "table") return ElementClass::table;
    if (s == "figure") return ElementClass::figure;
    throw ValidationError("unknown element class: " + s);
}

Category category_from_string(const std::string& s) {
    if (s == "passage") return Category::passage;
    if (s == "passage_first_page") return Category::passage_first_page;
    if (s == "passage_beyond_first_page") return Category::passage_beyond_first_page;
    if (s == "non_passage") return Category::non_passage;
    throw ValidationError("unknown category: " + s);
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split: " + s);
}

const DocumentImage& Dataset::doc(const std::string& doc_id) const {
    auto it = docs.find(doc_id);
    if (it == docs.end()) throw ValidationError("unknown doc_id: " + doc_id);
    return it->second;
}

namespace {

json number(double v) {
    double iv;
    if (std::modf(v, &iv) == 0.0) return static_cast<std::int64_t>(iv);
    return v;
}

}  // namespace

json bbox_to_json(const geom::BBox& b) {
    return json::array({json::array({number(b.x1), number(b.y1)}),
                        json::array({number(b.x2), number(b.y2)})});
}

geom::BBox bbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2) {
        throw ValidationError("gold_bbox must be [[x1,y1],[x2,y2]]");
    }
    return geom::BBox(j[0][0].get<double>(), j[0][1].get<double>(),
                      j[1][0].get<double>(), j[1][1].get<double>());
}

json example_to_json(const AttributionExample& ex) {
    json j;
    j["example_id"] = ex.example_id;
    j["query"] = ex.query;
    j["answers"] = ex.answers;
    j["gold_doc_id"] = ex.gold_doc_id;
    j["gold_bbox"] = bbox_to_json(ex.gold_bbox);
    j["category"] = to_string(ex.category);
    j["split"] = to_string(ex.split);
    return j;
}

AttributionExample example_from_json(const json& j) {
    AttributionExample ex;
    ex.example_id = j.at("example_id").get<std::string>();
    ex.query = j.at("query").get<std::string>();
    ex.answers = j.at("answers").get<std::vector<std::string>>();
    ex.gold_doc_id = j.at("gold_doc_id").get<std::string>();
    ex.gold_bbox = bbox_from_json(j.at("gold_bbox"));
    ex.category = category_from_string(j.at("category").get<std::string>());
    ex.split = split_from_string(j.at("split").get<std::string>());
    if (ex.answers.empty()) throw ValidationError("answers must be non-empty");
    return ex;
}

json document_to_json(const DocumentImage& d) {
    json j;
    j["doc_id"] = d.doc_id;
    j["width"] = d.width;
    j["height"] = d.height;
    j["page_height"] = d.page_height;
    j["image_path"] = d.image_path;
    if (d.source_url) j["source_url"] = *d.source_url;
    return j;
}

DocumentImage document_from_json(const json& j) {
    DocumentImage d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.width = j.at("width").get<int>();
    d.height = j.at("height").get<int>();
    d.page_height = j.at("page_height").get<int>();
    d.image_path = j.at("image_path").get<std::string>();
    if (j.contains("source_url")) d.source_url = j["source_url"].get<std::string>();
    if (d.width <= 0 || d.height <= 0) throw ValidationError("non-positive image dims");
    if (d.page_height <= 0) throw ValidationError("non-positive page_height");
    return d;
}

LoadResult load_dataset(const std::filesystem::path& dir, const LoadOptions& opts) {
    LoadResult res;
    res.dataset.root = dir;

    auto for_each_line = [&](const std::string& name, auto&& fn) {
        const auto path = dir / name;
        std::ifstream in(path);
        if (!in) {
            res.issues.push_back({name, 0, "cannot open " + path.string()});
            return;
        }
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                fn(json::parse(line), lineno);
            } catch (const json::exception& e) {
                res.issues.push_back({name, lineno, std::string("malformed JSON: ") + e.what()});
            } catch (const Error& e) {
                res.issues.push_back({name, lineno, e.what()});
            }
        }
    };

    for_each_line("documents.jsonl", [&](const json& j, int lineno) {
        DocumentImage d = document_from_json(j);
        if (res.dataset.docs.count(d.doc_id)) {
            throw ValidationError("duplicate doc_id: " + d.doc_id);
        }
        const auto img = dir / d.image_path;
        if (opts.require_image_files && !std::filesystem::exists(img)) {
            throw ValidationError("missing image file: " + img.string());
        }
        if (opts.verify_image_dims) {
            cv::Mat m = cv::imread(img.string());
            if (m.empty() || m.cols != d.width || m.rows != d.height) {
                std::ostringstream os;
                os << "image " << img.string() << " does not decode to " << d.width
                   << "x" << d.height;
                throw ValidationError(os.str());
            }
        }
        res.dataset.docs.emplace(d.doc_id, std::move(d));
        (void)lineno;
    });

    std::set<std::string> example_ids;
    for_each_line("examples.jsonl", [&](const json& j, int lineno) {
        AttributionExample ex = example_from_json(j);
        if (!example_ids.insert(ex.example_id).second) {
            throw ValidationError("duplicate example_id: " + ex.example_id);
        }
        auto it = res.dataset.docs.find(ex.gold_doc_id);
        if (it == res.dataset.docs.end()) {
            throw ValidationError("gold_doc_id not in corpus: " + ex.gold_doc_id);
        }
        const auto dims = it->second.dims();
        if (ex.gold_bbox.x2 > dims.width || ex.gold_bbox.y2 > dims.height) {
            throw ValidationError("gold_bbox outside document dims");
        }
        res.dataset.examples.push_back(std::move(ex));
        (void)lineno;
    });

    return res;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "documents.jsonl");
        for (const auto& [id, d] : ds.docs) out << document_to_json(d).dump() << "\n";
    }
    {
        std::ofstream out(dir / "examples.jsonl");
        for (const auto& ex : ds.examples) out << example_to_json(ex).dump() << "\n";
    }
}

std::vector<LayoutRecord> ingest_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json root = json::parse(in);

    std::map<std::int64_t, std::string> image_names;
    for (const auto& img : root.at("images")) {
        image_names[img.at("id").get<std::int64_t>()] =
            img.contains("file_name") ? img["file_name"].get<std::string>()
                                      : std::to_string(img.at("id").get<std::int64_t>());
    }
    std::map<std::int64_t, ElementClass> classes;
    for (const auto& cat : root.at("categories")) {
        classes[cat.at("id").get<std::int64_t>()] =
            element_class_from_string(cat.at("name").get<std::string>());
    }

    std::vector<LayoutRecord> out;
    for (const auto& ann : root.at("annotations")) {
        const auto image_id = ann.at("image_id").get<std::int64_t>();
        auto img_it = image_names.find(image_id);
        if (img_it == image_names.end()) {
            throw ValidationError("annotation references missing image id " +
                                  std::to_string(image_id));
        }
        const auto cat_id = ann.at("category_id").get<std::int64_t>();
        auto cls_it = classes.find(cat_id);
        if (cls_it == classes.end()) {
            throw ValidationError("unknown category id " + std::to_string(cat_id));
        }
        const auto& b = ann.at("bbox");
        const double x = b.at(0).get<double>();
        const double y = b.at(1).get<double>();
        const double w = b.at(2).get<double>();
        const double h = b.at(3).get<double>();
        if (w <= 0 || h <= 0) {
            throw InvalidBoxError("degenerate annotation bbox on image " +
                                  img_it->second);
        }
        out.push_back({img_it->second, geom::BBox(x, y, x + w, y + h), cls_it->second});
    }
    return out;
}

Category assign_category(ElementClass element_class, const geom::BBox& bbox,
                         const geom::ImageDims& dims, bool multi_page) {
    if (element_class != ElementClass::text) return Category::non_passage;
    if (!multi_page) return Category::passage;
    return geom::page_category(bbox, dims) == geom::PageCategory::first_page
               ? Category::passage_first_page
               : Category::passage_beyond_first_page;
}

DatasetStats dataset_stats(const Dataset& ds) {
    DatasetStats st;
    for (const auto& ex : ds.examples) {
        ++st.per_split[ex.split];
        ++st.per_category[ex.category];
        ++st.total;
    }
    return st;
}

}  // namespace visa::corpus
