#include "visa/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "visa/qaforge.hpp"
#include "visa/render.hpp"
#include "visa/rng.hpp"

namespace visa::pipeline {

using nlohmann::json;

namespace {

json endpoint_to_json(const chat::EndpointConfig& e) {
    return json{{"url", e.url},
                {"auth_env", e.auth_env},
                {"model", e.model},
                {"timeout_seconds", e.timeout_seconds}};
}

chat::EndpointConfig endpoint_from_json(const json& j) {
    chat::EndpointConfig e;
    e.url = j.at("url").get<std::string>();
    e.auth_env = j.value("auth_env", "");
    e.model = j.value("model", "default");
    e.timeout_seconds = j.value("timeout_seconds", 120);
    return e;
}

std::string path_str(const std::filesystem::path& p) { return p.string(); }

}  // namespace

json RunConfig::to_json() const {
    json j;
    j["input_dir"] = path_str(input_dir);
    j["dataset_dir"] = path_str(dataset_dir);
    j["output_dir"] = path_str(output_dir);
    j["layout_path"] = path_str(layout_path);
    j["doc_embeddings"] = path_str(doc_embeddings);
    j["query_embeddings"] = path_str(query_embeddings);
    j["candidates_path"] = path_str(candidates_path);
    j["replay_raw"] = path_str(replay_raw);
    j["assembly"] = {{"k", assembly.k},
                     {"m", assembly.m},
                     {"no_answer_prob", assembly.no_answer_prob}};
    if (endpoint) j["endpoint"] = endpoint_to_json(*endpoint);
    if (mock) {
        j["mock"] = json::object();
        if (!mock->builtin.empty()) j["mock"]["builtin"] = mock->builtin;
        if (!mock->script.empty()) j["mock"]["script"] = path_str(mock->script);
    }
    j["mode"] = evaluate::to_string(mode);
    j["coord_mode"] = coord_mode == attrgen::CoordMode::absolute ? "absolute" : "normalized";
    j["thresholds"] = {{"iou", thresholds.iou},
                       {"triage_low", thresholds.triage_low},
                       {"containment", thresholds.containment}};
    j["crop_augment"] = crop_augment;
    if (multi_page) j["multi_page"] = *multi_page;
    j["eval_split"] = eval_split;
    j["seed"] = seed;
    j["concurrency"] = concurrency;
    j["max_retries"] = max_retries;
    j["render_gallery"] = render_gallery;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.input_dir = j.value("input_dir", "");
    c.dataset_dir = j.value("dataset_dir", "");
    c.output_dir = j.value("output_dir", "");
    c.layout_path = j.value("layout_path", "");
    c.doc_embeddings = j.value("doc_embeddings", "");
    c.query_embeddings = j.value("query_embeddings", "");
    c.candidates_path = j.value("candidates_path", "");
    c.replay_raw = j.value("replay_raw", "");
    if (j.contains("assembly")) {
        const auto& a = j["assembly"];
        c.assembly.k = a.value("k", 20);
        c.assembly.m = a.value("m", 3);
        c.assembly.no_answer_prob = a.value("no_answer_prob", 0.2);
    }
    if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j["endpoint"]);
    if (j.contains("mock")) {
        MockConfig m;
        m.builtin = j["mock"].value("builtin", "");
        m.script = j["mock"].value("script", "");
        c.mock = m;
    }
    if (j.contains("mode")) c.mode = evaluate::report_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("coord_mode")) {
        c.coord_mode = j["coord_mode"] == "normalized" ? attrgen::CoordMode::normalized
                                                       : attrgen::CoordMode::absolute;
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        c.thresholds.iou = t.value("iou", 0.5);
        c.thresholds.triage_low = t.value("triage_low", 0.1);
        c.thresholds.containment = t.value("containment", 0.9);
    }
    c.crop_augment = j.value("crop_augment", false);
    if (j.contains("multi_page")) c.multi_page = j["multi_page"].get<bool>();
    c.eval_split = j.value("eval_split", "test");
    c.seed = j.value("seed", std::uint64_t{0});
    c.concurrency = j.value("concurrency", 1);
    c.max_retries = j.value("max_retries", 3);
    c.render_gallery = j.value("render_gallery", false);
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path.string());
    return from_json(json::parse(in));
}

namespace {

void print_issues(const std::vector<corpus::Issue>& issues) {
    for (const auto& i : issues) {
        std::cerr << i.file;
        if (i.line > 0) std::cerr << ":" << i.line;
        std::cerr << ": " << i.message << "\n";
    }
}

/// Config embedded verbatim in every output artifact's manifest.
void write_manifest(const RunConfig& cfg, const json& extra) {
    std::filesystem::create_directories(cfg.output_dir);
    json j = extra;
    j["config"] = cfg.to_json();
    std::ofstream out(cfg.output_dir / "manifest.json");
    out << j.dump(2) << "\n";
}

bool derive_multi_page(const RunConfig& cfg, const corpus::Dataset& ds) {
    if (cfg.multi_page) return *cfg.multi_page;
    for (const auto& ex : ds.examples) {
        if (ex.category == corpus::Category::passage) return false;
        if (ex.category == corpus::Category::passage_first_page ||
            ex.category == corpus::Category::passage_beyond_first_page) {
            return true;
        }
    }
    for (const auto& [id, d] : ds.docs) {
        if (d.height > d.page_height) return true;
    }
    return false;
}

void copy_images(const corpus::Dataset& ds, const std::filesystem::path& out_dir) {
    for (const auto& [id, d] : ds.docs) {
        const auto src = ds.root / d.image_path;
        const auto dst = out_dir / d.image_path;
        std::filesystem::create_directories(dst.parent_path());
        std::filesystem::copy_file(src, dst,
                                   std::filesystem::copy_options::overwrite_existing);
    }
}

std::string print_stats(const corpus::DatasetStats& st) {
    std::ostringstream os;
    os << "examples: " << st.total << "\n";
    for (const auto& [split, n] : st.per_split) {
        os << "  " << corpus::to_string(split) << ": " << n << "\n";
    }
    for (const auto& [cat, n] : st.per_category) {
        os << "  " << corpus::to_string(cat) << ": " << n << "\n";
    }
    return os.str();
}

}  // namespace

int cmd_build_dataset(const RunConfig& cfg) {
    auto loaded = corpus::load_dataset(cfg.input_dir);
    if (!loaded.ok()) {
        print_issues(loaded.issues);
        return kValidationFailure;
    }
    corpus::Dataset ds = std::move(loaded.dataset);

    std::filesystem::create_directories(cfg.output_dir);
    copy_images(ds, cfg.output_dir);

    if (cfg.crop_augment) {
        // Crop train-split screenshots around the gold box and remap the
        // target; test examples keep the full document.
        std::filesystem::create_directories(cfg.output_dir / "images" / "crops");
        for (auto& ex : ds.examples) {
            if (ex.split != corpus::Split::train) continue;
            const auto& doc = ds.doc(ex.gold_doc_id);
            Rng rng(derive_seed(cfg.seed, ex.example_id));
            const auto crop = geom::sample_crop(doc.dims(), ex.gold_bbox, rng);

            cv::Mat img = cv::imread((ds.root / doc.image_path).string());
            if (img.empty()) {
                std::cerr << "cannot read image for " << doc.doc_id << "\n";
                return kValidationFailure;
            }
            cv::Mat cropped = img(cv::Rect(static_cast<int>(crop.x1),
                                           static_cast<int>(crop.y1),
                                           static_cast<int>(crop.width()),
                                           static_cast<int>(crop.height())))
                                  .clone();
            corpus::DocumentImage cdoc;
            cdoc.doc_id = ex.example_id + "#crop";
            cdoc.width = cropped.cols;
            cdoc.height = cropped.rows;
            cdoc.page_height = doc.page_height;
            cdoc.image_path = "images/crops/" + ex.example_id + ".png";
            cv::imwrite((cfg.output_dir / cdoc.image_path).string(), cropped);
            ds.docs.emplace(cdoc.doc_id, cdoc);

            ex.gold_bbox = geom::remap_bbox(ex.gold_bbox, crop);
            ex.gold_doc_id = cdoc.doc_id;
        }
    }

    std::sort(ds.examples.begin(), ds.examples.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
    corpus::write_dataset(ds, cfg.output_dir);

    const auto st = corpus::dataset_stats(ds);
    std::cout << print_stats(st);
    write_manifest(cfg, json{{"artifact", "dataset"}, {"examples", st.total}});
    return kOk;
}

namespace {

std::unique_ptr<chat::InferenceClient> make_client(
    const RunConfig& cfg, chat::ScriptedClient::Responder scripted) {
    if (cfg.mock) return std::make_unique<chat::ScriptedClient>(std::move(scripted));
    if (cfg.endpoint) return std::make_unique<chat::HttpChatClient>(*cfg.endpoint);
    throw ValidationError("no endpoint or mock configured");
}

}  // namespace

int cmd_synthesize(const RunConfig& cfg) {
    auto loaded = corpus::load_dataset(cfg.dataset_dir);
    // Synthesis needs documents only; a missing examples.jsonl is fine.
    std::erase_if(loaded.issues,
                  [](const corpus::Issue& i) { return i.file == "examples.jsonl"; });
    if (!loaded.ok()) {
        print_issues(loaded.issues);
        return kValidationFailure;
    }
    const corpus::Dataset& ds = loaded.dataset;

    std::vector<corpus::LayoutRecord> targets;
    try {
        targets = corpus::ingest_layout(cfg.layout_path);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }

    // Scripted responses are consumed in layout order.
    std::vector<std::string> script;
    std::size_t script_pos = 0;
    if (cfg.mock && !cfg.mock->script.empty()) {
        std::ifstream in(cfg.mock->script);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            script.push_back(json::parse(line).at("response").get<std::string>());
        }
    }
    auto responder = [&](const chat::ChatRequest&) -> std::string {
        if (script_pos >= script.size()) return "Empty";
        return script[script_pos++];
    };

    std::unique_ptr<chat::InferenceClient> client;
    try {
        client = make_client(cfg, responder);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }
    chat::RetryingClient retrying(*client, cfg.max_retries);

    qaforge::SynthesisConfig scfg;
    scfg.work_dir = cfg.output_dir / "overlays";
    scfg.multi_page = cfg.multi_page.value_or(false);

    std::vector<corpus::AttributionExample> examples;
    int skipped = 0;
    for (const auto& target : targets) {
        auto doc_it = ds.docs.find(target.doc_id);
        if (doc_it == ds.docs.end()) {
            std::cerr << "layout references unknown doc: " << target.doc_id << "\n";
            return kValidationFailure;
        }
        try {
            auto ex = qaforge::synthesize_example(doc_it->second, ds.root, target,
                                                  retrying, scfg);
            if (ex) {
                examples.push_back(std::move(*ex));
            } else {
                ++skipped;
            }
        } catch (const TransportError& e) {
            std::cerr << e.what() << "\n";
            return kEndpointFailure;
        }
    }

    // Deterministic output order regardless of request concurrency.
    std::sort(examples.begin(), examples.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });

    corpus::Dataset out = ds;
    out.examples = std::move(examples);
    std::filesystem::create_directories(cfg.output_dir);
    copy_images(ds, cfg.output_dir);
    corpus::write_dataset(out, cfg.output_dir);
    std::cout << "synthesized " << out.examples.size() << " examples, skipped "
              << skipped << "\n";
    write_manifest(cfg, json{{"artifact", "synthesis"},
                             {"examples", out.examples.size()},
                             {"skipped", skipped}});
    return kOk;
}

int cmd_assemble(const RunConfig& cfg) {
    auto loaded = corpus::load_dataset(cfg.dataset_dir);
    if (!loaded.ok()) {
        print_issues(loaded.issues);
        return kValidationFailure;
    }
    const corpus::Dataset& ds = loaded.dataset;

    retrieval::EmbeddingIndex index;
    std::map<std::string, std::vector<double>> query_vecs;
    try {
        index = retrieval::EmbeddingIndex::load_jsonl(cfg.doc_embeddings);
        std::ifstream in(cfg.query_embeddings);
        if (!in) throw ValidationError("cannot open " + cfg.query_embeddings.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            query_vecs[j.at("example_id").get<std::string>()] =
                j.at("vector").get<std::vector<double>>();
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }

    retrieval::AssemblyConfig acfg = cfg.assembly;
    acfg.seed = cfg.seed;

    std::vector<corpus::AttributionExample> targets;
    for (const auto& ex : ds.examples) {
        if (corpus::to_string(ex.split) == cfg.eval_split) targets.push_back(ex);
    }
    std::sort(targets.begin(), targets.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });

    std::vector<retrieval::CandidateSet> sets;
    int with_gold = 0;
    for (const auto& ex : targets) {
        auto qit = query_vecs.find(ex.example_id);
        if (qit == query_vecs.end()) {
            std::cerr << "no query embedding for " << ex.example_id << "\n";
            return kValidationFailure;
        }
        try {
            // Fetch one beyond k so the pool still holds k negatives when
            // gold sits inside the top-k.
            const auto ranked = index.top_k(qit->second, acfg.k + 1);
            auto cs = retrieval::assemble_candidates(ex, ranked, acfg);
            if (cs.has_gold) ++with_gold;
            sets.push_back(std::move(cs));
        } catch (const Error& e) {
            std::cerr << ex.example_id << ": " << e.what() << "\n";
            return kValidationFailure;
        }
    }

    std::filesystem::create_directories(cfg.output_dir);
    const auto out_path = cfg.candidates_path.empty()
                              ? cfg.output_dir / "candidates.jsonl"
                              : cfg.candidates_path;
    retrieval::write_candidate_sets(sets, out_path);

    const double retention =
        sets.empty() ? 0.0 : 100.0 * with_gold / static_cast<double>(sets.size());
    std::cout << "candidate sets: " << sets.size() << "\n";
    std::cout << "gold retention: " << std::fixed << std::setprecision(1) << retention
              << "%\n";
    write_manifest(cfg, json{{"artifact", "candidates"},
                             {"sets", sets.size()},
                             {"gold_retention_pct", retention}});
    return kOk;
}

namespace {

struct EvalInputs {
    corpus::Dataset ds;
    std::vector<corpus::AttributionExample> examples;  // id-sorted eval set
    std::map<std::string, retrieval::CandidateSet> cands;
    bool multi_page = false;
};

EvalInputs prepare_eval(const RunConfig& cfg) {
    auto loaded = corpus::load_dataset(cfg.dataset_dir);
    if (!loaded.ok()) {
        print_issues(loaded.issues);
        throw ValidationError("dataset failed validation");
    }
    EvalInputs in;
    in.ds = std::move(loaded.dataset);
    in.multi_page = derive_multi_page(cfg, in.ds);

    for (const auto& ex : in.ds.examples) {
        if (corpus::to_string(ex.split) == cfg.eval_split) in.examples.push_back(ex);
    }
    if (in.examples.empty()) in.examples = in.ds.examples;
    std::sort(in.examples.begin(), in.examples.end(),
              [](const auto& a, const auto& b) { return a.example_id < b.example_id; });

    if (cfg.mode != evaluate::ReportMode::single) {
        for (auto& cs : retrieval::load_candidate_sets(cfg.candidates_path)) {
            in.cands.emplace(cs.example_id, std::move(cs));
        }
        std::vector<corpus::AttributionExample> kept;
        for (const auto& ex : in.examples) {
            auto it = in.cands.find(ex.example_id);
            if (it == in.cands.end()) {
                throw ValidationError("no candidate set for " + ex.example_id);
            }
            // multi_oracle restricts to the gold-present subset, the same
            // query set as single mode scores when assembly prob is 0.
            if (cfg.mode == evaluate::ReportMode::multi_oracle && !it->second.has_gold) {
                continue;
            }
            kept.push_back(ex);
        }
        in.examples = std::move(kept);
    }
    return in;
}

}  // namespace

int cmd_evaluate(const RunConfig& cfg) {
    EvalInputs in;
    try {
        in = prepare_eval(cfg);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }

    const bool multi = cfg.mode != evaluate::ReportMode::single;
    attrgen::ParseOptions popts;
    popts.mode = multi ? attrgen::Mode::multi : attrgen::Mode::single;
    popts.coords = cfg.coord_mode;

    std::vector<attrgen::BatchItem> items;
    std::map<std::string, std::string> gold_targets;  // rendered request -> target
    std::map<std::string, std::string> scripted;      // rendered request -> response
    if (cfg.mock && !cfg.mock->script.empty()) {
        std::ifstream sin(cfg.mock->script);
        if (!sin) {
            std::cerr << "cannot open mock script: " << cfg.mock->script << "\n";
            return kValidationFailure;
        }
        std::map<std::string, std::string> by_id;
        std::string line;
        while (std::getline(sin, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            by_id[j.at("example_id").get<std::string>()] =
                j.at("response").get<std::string>();
        }
        for (const auto& ex : in.examples) {
            if (auto it = by_id.find(ex.example_id); it != by_id.end()) {
                scripted["@" + ex.example_id] = it->second;
            }
        }
    }

    for (const auto& ex : in.examples) {
        attrgen::BatchItem item;
        item.example_id = ex.example_id;
        const retrieval::CandidateSet* cands = nullptr;
        if (multi) {
            cands = &in.cands.at(ex.example_id);
            item.request = attrgen::build_multi_prompt(ex.query, *cands, in.ds);
            for (const auto& doc_id : cands->docs) {
                item.dims.push_back(in.ds.doc(doc_id).dims());
            }
        } else {
            const auto& doc = in.ds.doc(ex.gold_doc_id);
            item.request = attrgen::build_single_prompt(ex.query, doc, in.ds.root);
            item.dims.push_back(doc.dims());
        }
        const auto key = item.request.render();
        gold_targets[key] = attrgen::format_target(
            ex, cands, in.ds.doc(ex.gold_doc_id).dims(), cfg.coord_mode);
        if (cfg.mock && !cfg.mock->script.empty()) {
            if (auto it = scripted.find("@" + ex.example_id); it != scripted.end()) {
                scripted[key] = it->second;
            }
        }
        items.push_back(std::move(item));
    }

    std::vector<attrgen::BatchResult> results;
    if (!cfg.replay_raw.empty()) {
        try {
            results = attrgen::replay_batch(items, cfg.replay_raw, popts);
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return kValidationFailure;
        }
    } else {
        auto responder = [&](const chat::ChatRequest& req) -> std::string {
            const auto key = req.render();
            if (cfg.mock && cfg.mock->builtin == "gold_echo") {
                auto it = gold_targets.find(key);
                if (it != gold_targets.end()) return it->second;
                throw TransportError("gold_echo mock saw an unknown request");
            }
            auto it = scripted.find(key);
            if (it != scripted.end()) return it->second;
            throw TransportError("no scripted response for request");
        };
        std::unique_ptr<chat::InferenceClient> client;
        try {
            client = make_client(cfg, responder);
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return kValidationFailure;
        }
        attrgen::BatchOptions bopts;
        bopts.parse = popts;
        bopts.max_retries = cfg.max_retries;
        bopts.concurrency = cfg.concurrency;
        results = attrgen::run_batch(items, *client, bopts);

        int transport_failures = 0;
        for (const auto& r : results) {
            if (r.output.kind == attrgen::OutputKind::unparseable &&
                r.output.note.rfind("transport failure", 0) == 0) {
                ++transport_failures;
            }
        }
        if (!results.empty() && transport_failures == static_cast<int>(results.size())) {
            std::cerr << "endpoint unreachable after retries\n";
            return kEndpointFailure;
        }
    }

    std::filesystem::create_directories(cfg.output_dir);
    if (cfg.replay_raw.empty()) {
        attrgen::write_raw_responses(results, cfg.output_dir / "raw_responses.jsonl");
    }
    attrgen::write_results(results, cfg.output_dir / "results.jsonl");

    std::map<std::string, corpus::AttributionExample> ex_by_id;
    for (const auto& ex : in.examples) ex_by_id.emplace(ex.example_id, ex);

    std::vector<evaluate::ExampleScore> scores;
    for (const auto& r : results) {
        const auto& ex = ex_by_id.at(r.example_id);
        const retrieval::CandidateSet* cands =
            multi ? &in.cands.at(r.example_id) : nullptr;
        scores.push_back(evaluate::score_example(r.output, ex, cands, cfg.thresholds));
    }
    evaluate::write_scores(scores, cfg.output_dir / "scores.jsonl");

    const auto report =
        evaluate::aggregate(scores, ex_by_id, cfg.mode, in.multi_page, cfg.thresholds);
    {
        std::ofstream out(cfg.output_dir / "report.json");
        out << evaluate::report_to_json(report).dump(2) << "\n";
    }
    const auto table = evaluate::format_report_table(report);
    {
        std::ofstream out(cfg.output_dir / "report.txt");
        out << table;
    }
    std::cout << table;

    if (cfg.render_gallery) {
        std::map<std::string, retrieval::CandidateSet> cands_subset;
        if (multi) cands_subset = in.cands;
        corpus::Dataset eval_ds = in.ds;
        eval_ds.examples = in.examples;
        render::render_gallery(results, scores, eval_ds, cands_subset,
                               cfg.output_dir / "gallery");
    }

    write_manifest(cfg, json{{"artifact", "evaluation"},
                             {"examples", in.examples.size()},
                             {"mode", evaluate::to_string(cfg.mode)}});
    return kOk;
}

int cmd_report(const RunConfig& cfg) {
    std::ifstream in(cfg.output_dir / "report.json");
    if (!in) {
        std::cerr << "no report.json in " << cfg.output_dir << "\n";
        return kValidationFailure;
    }
    const auto report = evaluate::report_from_json(json::parse(in));
    const auto table = evaluate::format_report_table(report);
    std::ofstream out(cfg.output_dir / "report.txt");
    out << table;
    std::cout << table;
    return kOk;
}

int cmd_render(const RunConfig& cfg) {
    EvalInputs in;
    try {
        in = prepare_eval(cfg);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }
    const bool multi = cfg.mode != evaluate::ReportMode::single;
    attrgen::ParseOptions popts;
    popts.mode = multi ? attrgen::Mode::multi : attrgen::Mode::single;
    popts.coords = cfg.coord_mode;

    // Re-parse persisted raw responses, then score and render the gallery.
    std::vector<attrgen::BatchItem> items;
    for (const auto& ex : in.examples) {
        attrgen::BatchItem item;
        item.example_id = ex.example_id;
        if (multi) {
            for (const auto& doc_id : in.cands.at(ex.example_id).docs) {
                item.dims.push_back(in.ds.doc(doc_id).dims());
            }
        } else {
            item.dims.push_back(in.ds.doc(ex.gold_doc_id).dims());
        }
        items.push_back(std::move(item));
    }
    std::vector<attrgen::BatchResult> results;
    try {
        results = attrgen::replay_batch(
            items,
            cfg.replay_raw.empty() ? cfg.output_dir / "raw_responses.jsonl"
                                   : cfg.replay_raw,
            popts);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kValidationFailure;
    }

    std::map<std::string, corpus::AttributionExample> ex_by_id;
    for (const auto& ex : in.examples) ex_by_id.emplace(ex.example_id, ex);
    std::vector<evaluate::ExampleScore> scores;
    for (const auto& r : results) {
        const retrieval::CandidateSet* cands =
            multi ? &in.cands.at(r.example_id) : nullptr;
        scores.push_back(evaluate::score_example(r.output, ex_by_id.at(r.example_id),
                                                 cands, cfg.thresholds));
    }

    corpus::Dataset eval_ds = in.ds;
    eval_ds.examples = in.examples;
    const auto entries = render::render_gallery(results, scores, eval_ds, in.cands,
                                                cfg.output_dir / "gallery");
    std::cout << "rendered " << entries.size() << " gallery images\n";
    return kOk;
}

}  // namespace visa::pipeline
