#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visa/chat.hpp"
#include "visa/corpus.hpp"
#include "visa/retrieval.hpp"

namespace visa::attrgen {

enum class Mode { single, multi };

enum class CoordMode { absolute, normalized };

enum class OutputKind { answered, no_answer, unparseable };

struct ModelOutput {
    OutputKind kind = OutputKind::unparseable;
    std::optional<std::string> answer;
    std::optional<int> evidence_index;  // 1-based, multi mode only
    std::optional<geom::BBox> bbox;
    std::string note;  // parse/transport diagnostics for triage
};

struct ParseOptions {
    Mode mode = Mode::single;
    CoordMode coords = CoordMode::absolute;
};

/// Render a bounding box the way prompts and targets carry it:
/// "[({x1}, {y1}), ({x2}, {y2})]". Absolute coordinates print as rounded
/// integers, normalized ones with four decimals.
std::string format_bbox(const geom::BBox& b, CoordMode mode, const geom::ImageDims& dims);

chat::ChatRequest build_single_prompt(const std::string& query,
                                      const corpus::DocumentImage& doc,
                                      const std::filesystem::path& corpus_root);

chat::ChatRequest build_multi_prompt(const std::string& query,
                                     const retrieval::CandidateSet& cands,
                                     const corpus::Dataset& ds);

/// Parse a model generation into a structured output. Never throws: any
/// text matching neither the answered shape nor the no-answer sentinel
/// comes back as unparseable with a diagnostic note. Parsed boxes are
/// clipped to the referenced candidate's dims.
ModelOutput parse_model_output(const std::string& text, const ParseOptions& opts,
                               const std::vector<geom::ImageDims>& dims_per_candidate);

/// Render the assistant target block for an example: the exact string a
/// perfect model would generate.
std::string format_target(const corpus::AttributionExample& ex,
                          const retrieval::CandidateSet* cands,
                          const geom::ImageDims& gold_dims,
                          CoordMode coords = CoordMode::absolute);

struct BatchItem {
    std::string example_id;
    chat::ChatRequest request;
    std::vector<geom::ImageDims> dims;  // one per candidate image, in order
};

struct BatchResult {
    std::string example_id;
    ModelOutput output;
    double latency_ms = 0.0;
    std::string raw;
};

struct BatchOptions {
    ParseOptions parse;
    int max_retries = 3;
    int concurrency = 1;
};

/// Drive the endpoint over a batch; one result per item, sorted by
/// example_id. Transport failures after retries become unparseable
/// results, never abort the batch.
std::vector<BatchResult> run_batch(const std::vector<BatchItem>& items,
                                   chat::InferenceClient& client,
                                   const BatchOptions& opts);

/// Re-parse persisted raw responses without touching the network.
std::vector<BatchResult> replay_batch(const std::vector<BatchItem>& items,
                                      const std::filesystem::path& raw_path,
                                      const ParseOptions& parse);

void write_raw_responses(const std::vector<BatchResult>& results,
                         const std::filesystem::path& path);

nlohmann::json result_to_json(const BatchResult& r);
void write_results(const std::vector<BatchResult>& results,
                   const std::filesystem::path& path);

}  // namespace visa::attrgen
