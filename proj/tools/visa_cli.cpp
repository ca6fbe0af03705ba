#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "visa/pipeline.hpp"

using visa::pipeline::RunConfig;

namespace {

struct Overrides {
    std::string config_path;
    std::string input_dir, dataset_dir, output_dir, layout_path;
    std::string doc_embeddings, query_embeddings, candidates_path, replay_raw;
    std::string mode, coord_mode, eval_split, mock_builtin, mock_script;
    std::string endpoint_url, endpoint_auth_env, endpoint_model;
    std::int64_t seed = -1;
    int k = -1, m = -1, concurrency = -1;
    double no_answer_prob = -1.0;
    bool crop_augment = false, render_gallery = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file");
    cmd->add_option("--input-dir", o.input_dir);
    cmd->add_option("--dataset-dir", o.dataset_dir);
    cmd->add_option("--output-dir", o.output_dir);
    cmd->add_option("--layout", o.layout_path);
    cmd->add_option("--doc-embeddings", o.doc_embeddings);
    cmd->add_option("--query-embeddings", o.query_embeddings);
    cmd->add_option("--candidates", o.candidates_path);
    cmd->add_option("--replay", o.replay_raw, "replay persisted raw responses");
    cmd->add_option("--mode", o.mode)->check(CLI::IsMember({"single", "multi_oracle", "multi_full"}));
    cmd->add_option("--coord-mode", o.coord_mode)->check(CLI::IsMember({"absolute", "normalized"}));
    cmd->add_option("--split", o.eval_split);
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--k", o.k);
    cmd->add_option("--m", o.m);
    cmd->add_option("--no-answer-prob", o.no_answer_prob);
    cmd->add_option("--concurrency", o.concurrency);
    cmd->add_option("--endpoint-url", o.endpoint_url);
    cmd->add_option("--endpoint-auth-env", o.endpoint_auth_env);
    cmd->add_option("--endpoint-model", o.endpoint_model);
    cmd->add_option("--mock", o.mock_builtin, "builtin mock (gold_echo)");
    cmd->add_option("--mock-script", o.mock_script, "JSONL of scripted responses");
    cmd->add_flag("--crop-augment", o.crop_augment);
    cmd->add_flag("--render-gallery", o.render_gallery);
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = RunConfig::load(o.config_path);
    if (!o.input_dir.empty()) cfg.input_dir = o.input_dir;
    if (!o.dataset_dir.empty()) cfg.dataset_dir = o.dataset_dir;
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (!o.layout_path.empty()) cfg.layout_path = o.layout_path;
    if (!o.doc_embeddings.empty()) cfg.doc_embeddings = o.doc_embeddings;
    if (!o.query_embeddings.empty()) cfg.query_embeddings = o.query_embeddings;
    if (!o.candidates_path.empty()) cfg.candidates_path = o.candidates_path;
    if (!o.replay_raw.empty()) cfg.replay_raw = o.replay_raw;
    if (!o.mode.empty()) cfg.mode = visa::evaluate::report_mode_from_string(o.mode);
    if (!o.coord_mode.empty()) {
        cfg.coord_mode = o.coord_mode == "normalized" ? visa::attrgen::CoordMode::normalized
                                                      : visa::attrgen::CoordMode::absolute;
    }
    if (!o.eval_split.empty()) cfg.eval_split = o.eval_split;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.k >= 0) cfg.assembly.k = o.k;
    if (o.m >= 0) cfg.assembly.m = o.m;
    if (o.no_answer_prob >= 0) cfg.assembly.no_answer_prob = o.no_answer_prob;
    if (o.concurrency >= 0) cfg.concurrency = o.concurrency;
    if (!o.endpoint_url.empty()) {
        visa::chat::EndpointConfig e = cfg.endpoint.value_or(visa::chat::EndpointConfig{});
        e.url = o.endpoint_url;
        if (!o.endpoint_auth_env.empty()) e.auth_env = o.endpoint_auth_env;
        if (!o.endpoint_model.empty()) e.model = o.endpoint_model;
        cfg.endpoint = e;
    }
    if (!o.mock_builtin.empty() || !o.mock_script.empty()) {
        visa::pipeline::MockConfig m;
        m.builtin = o.mock_builtin;
        m.script = o.mock_script;
        cfg.mock = m;
    }
    if (o.crop_augment) cfg.crop_augment = true;
    if (o.render_gallery) cfg.render_gallery = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visa: dataset pipeline and evaluation harness for "
                 "RAG with visual source attribution"};
    app.require_subcommand(1);

    Overrides o;
    auto* build = app.add_subcommand("build-dataset", "validate and canonicalize a dataset");
    auto* synth = app.add_subcommand("synthesize", "generate synthetic QA examples");
    auto* assemble = app.add_subcommand("assemble", "assemble candidate sets with hard negatives");
    auto* evaluate = app.add_subcommand("evaluate", "run inference and score");
    auto* report = app.add_subcommand("report", "re-emit the report table");
    auto* render = app.add_subcommand("render", "render gold vs predicted galleries");
    for (auto* cmd : {build, synth, assemble, evaluate, report, render}) {
        add_common(cmd, o);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve(o);
        if (build->parsed()) return visa::pipeline::cmd_build_dataset(cfg);
        if (synth->parsed()) return visa::pipeline::cmd_synthesize(cfg);
        if (assemble->parsed()) return visa::pipeline::cmd_assemble(cfg);
        if (evaluate->parsed()) return visa::pipeline::cmd_evaluate(cfg);
        if (report->parsed()) return visa::pipeline::cmd_report(cfg);
        if (render->parsed()) return visa::pipeline::cmd_render(cfg);
    } catch (const visa::TransportError& e) {
        std::cerr << e.what() << "\n";
        return visa::pipeline::kEndpointFailure;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return visa::pipeline::kValidationFailure;
    }
    return 0;
}
