#pragma once

#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "visa/chat.hpp"
#include "visa/corpus.hpp"
#include "visa/rng.hpp"

namespace visa::qaforge {

struct OverlayStyle {
    cv::Scalar color{0, 0, 255};  // BGR red
    int stroke = 3;               // band thickness in pixels, drawn inward
};

/// Question/short-answer pair extracted from a synthesis generation, or
/// the Empty sentinel.
struct SynthesisResult {
    bool empty = true;
    std::string question;
    std::string short_answer;
};

/// Draw a rectangle stroke along the box edges on a copy of the image.
/// Dimensions unchanged; pixels outside the stroke band untouched.
cv::Mat overlay_bbox(const cv::Mat& image, const geom::BBox& bbox,
                     const OverlayStyle& style = {});

/// System prompt sent when asking a VLM to invent a QA pair for the
/// content inside the red box.
const std::string& synthesis_system_prompt();

/// Build the synthesis request around an already-overlaid image file.
chat::ChatRequest build_synthesis_prompt(const std::string& overlaid_image_path);

/// Extract the "Question: ... Short Answer: ..." pair, or the Empty
/// sentinel. Throws ValidationError when the text matches neither shape.
SynthesisResult parse_synthesis_output(const std::string& text);

struct SynthesisConfig {
    OverlayStyle style;
    int min_passage_words = 50;  // passage targets below this are skipped
    bool multi_page = false;
    std::filesystem::path work_dir;  // where overlaid images are written
};

/// One end-to-end synthesis step: overlay the target, prompt the endpoint,
/// parse, and emit an example whose gold box is the original target.
/// Returns nothing on Empty, unparseable output, or a too-short passage.
std::optional<corpus::AttributionExample> synthesize_example(
    const corpus::DocumentImage& doc, const std::filesystem::path& corpus_root,
    const corpus::LayoutRecord& target, chat::InferenceClient& client,
    const SynthesisConfig& cfg, std::optional<int> word_count = std::nullopt);

}  // namespace visa::qaforge
