#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "visa/attrgen.hpp"
#include "visa/corpus.hpp"
#include "visa/evaluate.hpp"

namespace visa::render {

struct RenderOptions {
    int caption_height = 72;  // fixed-height strip appended below the image
};

/// Draw gold (green) and predicted (red) boxes on the evidence document
/// plus a caption strip with query, answers, IoU, and triage label.
/// Returns the written file path.
std::filesystem::path render_result(const corpus::AttributionExample& ex,
                                    const attrgen::ModelOutput& out,
                                    const corpus::Dataset& ds,
                                    const retrieval::CandidateSet* cands,
                                    const evaluate::ExampleScore& score,
                                    const std::filesystem::path& out_path,
                                    const RenderOptions& opts = {});

struct GalleryEntry {
    std::string file;
    std::string example_id;
    evaluate::ErrorType triage = evaluate::ErrorType::none;
};

/// Render every bbx-incorrect example into out_dir, grouped into one
/// subdirectory per error type, and write a machine-readable manifest.
std::vector<GalleryEntry> render_gallery(
    const std::vector<attrgen::BatchResult>& results,
    const std::vector<evaluate::ExampleScore>& scores, const corpus::Dataset& ds,
    const std::map<std::string, retrieval::CandidateSet>& cands_by_id,
    const std::filesystem::path& out_dir, const RenderOptions& opts = {});

}  // namespace visa::render
