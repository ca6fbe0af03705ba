#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "visa/attrgen.hpp"
#include "visa/evaluate.hpp"
#include "visa/retrieval.hpp"

namespace visa::pipeline {

// Exit codes shared by every subcommand.
constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kEndpointFailure = 2;

struct MockConfig {
    // "gold_echo" answers every request with the example's exact target.
    std::string builtin;
    // JSONL of {"example_id", "response"} for scripted runs.
    std::filesystem::path script;
};

struct RunConfig {
    std::filesystem::path input_dir;    // build-dataset input
    std::filesystem::path dataset_dir;  // validated dataset
    std::filesystem::path output_dir;
    std::filesystem::path layout_path;
    std::filesystem::path doc_embeddings;
    std::filesystem::path query_embeddings;
    std::filesystem::path candidates_path;
    std::filesystem::path replay_raw;  // evaluate from persisted raw responses

    retrieval::AssemblyConfig assembly;
    std::optional<chat::EndpointConfig> endpoint;
    std::optional<MockConfig> mock;

    evaluate::ReportMode mode = evaluate::ReportMode::single;
    attrgen::CoordMode coord_mode = attrgen::CoordMode::absolute;
    evaluate::Thresholds thresholds;
    bool crop_augment = false;
    std::optional<bool> multi_page;  // derived from the dataset when unset
    std::string eval_split = "test";
    std::uint64_t seed = 0;
    int concurrency = 1;
    int max_retries = 3;
    bool render_gallery = false;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

int cmd_build_dataset(const RunConfig& cfg);
int cmd_synthesize(const RunConfig& cfg);
int cmd_assemble(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);
int cmd_render(const RunConfig& cfg);

}  // namespace visa::pipeline
