#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "visa/pipeline.hpp"

using namespace visa;
using namespace visa::pipeline;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Corpus with six documents and one test example per category, written
/// to disk in the dataset layout the commands consume.
corpus::Dataset eval_dataset(const std::filesystem::path& dir) {
    corpus::Dataset ds;
    ds.root = dir;
    for (int i = 0; i < 6; ++i) {
        corpus::DocumentImage d;
        d.doc_id = "doc" + std::to_string(i);
        d.width = 200;
        d.height = 300;
        d.page_height = 150;
        d.image_path = "images/doc" + std::to_string(i) + ".png";
        testfix::write_image(dir / d.image_path, d.width, d.height);
        ds.docs.emplace(d.doc_id, d);
    }
    auto add = [&](const std::string& id, const std::string& gold, geom::BBox bbox,
                   corpus::Category cat) {
        corpus::AttributionExample ex;
        ex.example_id = id;
        ex.query = "query " + id;
        ex.answers = {"answer " + id};
        ex.gold_doc_id = gold;
        ex.gold_bbox = bbox;
        ex.category = cat;
        ex.split = corpus::Split::test;
        ds.examples.push_back(ex);
    };
    add("ex0", "doc0", geom::BBox(10, 10, 110, 60), corpus::Category::passage_first_page);
    add("ex1", "doc1", geom::BBox(20, 160, 120, 260),
        corpus::Category::passage_beyond_first_page);
    add("ex2", "doc2", geom::BBox(30, 40, 90, 120), corpus::Category::non_passage);
    add("ex3", "doc3", geom::BBox(5, 5, 60, 45), corpus::Category::passage_first_page);
    corpus::write_dataset(ds, dir);
    return ds;
}

std::map<std::string, retrieval::CandidateSet> write_candidates(
    const corpus::Dataset& ds, const std::filesystem::path& path,
    const std::set<std::string>& drop_gold) {
    std::vector<retrieval::CandidateSet> sets;
    int spin = 0;
    for (const auto& ex : ds.examples) {
        retrieval::CandidateSet cs;
        cs.example_id = ex.example_id;
        std::vector<std::string> negatives;
        for (const auto& [id, d] : ds.docs) {
            if (id != ex.gold_doc_id && negatives.size() < 3) negatives.push_back(id);
        }
        if (drop_gold.count(ex.example_id)) {
            cs.has_gold = false;
            cs.docs = negatives;
        } else {
            cs.has_gold = true;
            cs.gold_slot = 1 + (spin++ % 3);
            negatives.resize(2);
            cs.docs = negatives;
            cs.docs.insert(cs.docs.begin() + (*cs.gold_slot - 1), ex.gold_doc_id);
        }
        sets.push_back(std::move(cs));
    }
    retrieval::write_candidate_sets(sets, path);
    std::map<std::string, retrieval::CandidateSet> by_id;
    for (auto& cs : sets) by_id.emplace(cs.example_id, std::move(cs));
    return by_id;
}

}  // namespace

TEST_CASE("run config json round trip") {
    RunConfig cfg;
    cfg.dataset_dir = "/data/ds";
    cfg.output_dir = "/data/out";
    cfg.assembly.k = 10;
    cfg.assembly.no_answer_prob = 0.3;
    cfg.mode = evaluate::ReportMode::multi_full;
    cfg.coord_mode = attrgen::CoordMode::normalized;
    cfg.multi_page = true;
    cfg.seed = 42;
    cfg.endpoint = chat::EndpointConfig{"http://x/v1/chat/completions", "TOKEN_VAR",
                                        "m1", 30};
    MockConfig mock;
    mock.builtin = "gold_echo";
    cfg.mock = mock;

    const auto back = RunConfig::from_json(cfg.to_json());
    CHECK(back.dataset_dir == cfg.dataset_dir);
    CHECK(back.assembly.k == 10);
    CHECK(back.assembly.no_answer_prob == 0.3);
    CHECK(back.mode == evaluate::ReportMode::multi_full);
    CHECK(back.coord_mode == attrgen::CoordMode::normalized);
    CHECK(back.multi_page == cfg.multi_page);
    CHECK(back.seed == 42);
    REQUIRE(back.endpoint.has_value());
    CHECK(back.endpoint->auth_env == "TOKEN_VAR");
    REQUIRE(back.mock.has_value());
    CHECK(back.mock->builtin == "gold_echo");
}

TEST_CASE("cmd_build_dataset validates, copies, and is deterministic") {
    const auto dir = testfix::fresh_dir("build");
    eval_dataset(dir / "in");

    RunConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    REQUIRE(cmd_build_dataset(cfg) == kOk);
    CHECK(std::filesystem::exists(dir / "out/documents.jsonl"));
    CHECK(std::filesystem::exists(dir / "out/examples.jsonl"));
    CHECK(std::filesystem::exists(dir / "out/images/doc0.png"));
    CHECK(std::filesystem::exists(dir / "out/manifest.json"));

    const auto first = slurp(dir / "out/examples.jsonl");
    RunConfig cfg2 = cfg;
    cfg2.output_dir = dir / "out2";
    REQUIRE(cmd_build_dataset(cfg2) == kOk);
    CHECK(slurp(dir / "out2/examples.jsonl") == first);

    // built output reloads cleanly
    const auto reloaded = corpus::load_dataset(dir / "out");
    CHECK(reloaded.ok());
    CHECK(reloaded.dataset.examples.size() == 4);
}

TEST_CASE("cmd_build_dataset reports invalid records and fails") {
    const auto dir = testfix::fresh_dir("build_bad");
    eval_dataset(dir / "in");
    {
        std::ofstream out(dir / "in/examples.jsonl", std::ios::app);
        out << R"({"example_id":"bad","query":"q","answers":["a"],)"
            << R"("gold_doc_id":"doc0","gold_bbox":[[50,50],[10,10]],)"
            << R"("category":"non_passage","split":"test"})" << "\n";
    }
    RunConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    CHECK(cmd_build_dataset(cfg) == kValidationFailure);
    CHECK_FALSE(std::filesystem::exists(dir / "out/examples.jsonl"));
}

TEST_CASE("cmd_build_dataset crop augmentation keeps the gold box inside") {
    const auto dir = testfix::fresh_dir("build_crop");
    auto ds = eval_dataset(dir / "in");
    for (auto& ex : ds.examples) ex.split = corpus::Split::train;
    corpus::write_dataset(ds, dir / "in");

    RunConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    cfg.crop_augment = true;
    cfg.seed = 11;
    REQUIRE(cmd_build_dataset(cfg) == kOk);

    const auto out = corpus::load_dataset(dir / "out");
    REQUIRE(out.ok());
    for (const auto& ex : out.dataset.examples) {
        CHECK(ex.gold_doc_id.find("#crop") != std::string::npos);
        const auto& doc = out.dataset.doc(ex.gold_doc_id);
        CHECK(ex.gold_bbox.x1 >= 0);
        CHECK(ex.gold_bbox.y1 >= 0);
        CHECK(ex.gold_bbox.x2 <= doc.width);
        CHECK(ex.gold_bbox.y2 <= doc.height);
        // crop preserves the box's size
        const auto& orig =
            *std::find_if(ds.examples.begin(), ds.examples.end(), [&](const auto& o) {
                return o.example_id == ex.example_id;
            });
        CHECK(ex.gold_bbox.width() == orig.gold_bbox.width());
        CHECK(ex.gold_bbox.height() == orig.gold_bbox.height());
    }
}

TEST_CASE("cmd_assemble retention, determinism, and prob 0") {
    const auto dir = testfix::fresh_dir("assemble");
    corpus::Dataset ds;
    ds.root = dir / "ds";
    const int ndocs = 30;
    for (int i = 0; i < ndocs; ++i) {
        corpus::DocumentImage d;
        d.doc_id = "d" + std::to_string(i);
        d.width = 40;
        d.height = 40;
        d.image_path = "images/d" + std::to_string(i) + ".png";
        testfix::write_image(ds.root / d.image_path, d.width, d.height);
        ds.docs.emplace(d.doc_id, d);
    }
    const int n = 1000;
    std::vector<std::string> qlines;
    Rng rng(3);
    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < ndocs; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = rng.uniform01() * 2 - 1;
        vecs.push_back(v);
    }
    std::vector<std::string> dlines;
    for (int i = 0; i < ndocs; ++i) {
        nlohmann::json j{{"doc_id", "d" + std::to_string(i)}, {"vector", vecs[i]}};
        dlines.push_back(j.dump());
    }
    for (int i = 0; i < n; ++i) {
        corpus::AttributionExample ex;
        ex.example_id = "q" + std::to_string(1000 + i);
        ex.query = "q";
        ex.answers = {"a"};
        ex.gold_doc_id = "d" + std::to_string(i % ndocs);
        ex.gold_bbox = geom::BBox(1, 1, 10, 10);
        ex.category = corpus::Category::non_passage;
        ex.split = corpus::Split::test;
        ds.examples.push_back(ex);
        nlohmann::json j{{"example_id", ex.example_id}, {"vector", vecs[i % ndocs]}};
        qlines.push_back(j.dump());
    }
    corpus::write_dataset(ds, ds.root);
    testfix::write_lines(dir / "doc_emb.jsonl", dlines);
    testfix::write_lines(dir / "query_emb.jsonl", qlines);

    RunConfig cfg;
    cfg.dataset_dir = ds.root;
    cfg.output_dir = dir / "out";
    cfg.doc_embeddings = dir / "doc_emb.jsonl";
    cfg.query_embeddings = dir / "query_emb.jsonl";
    cfg.seed = 5;
    REQUIRE(cmd_assemble(cfg) == kOk);

    const auto sets = retrieval::load_candidate_sets(dir / "out/candidates.jsonl");
    REQUIRE(static_cast<int>(sets.size()) == n);
    int kept = 0;
    for (const auto& cs : sets) {
        CHECK(cs.docs.size() == 3);
        if (cs.has_gold) ++kept;
    }
    const double retention = 100.0 * kept / n;
    CHECK(retention > 77.0);
    CHECK(retention < 83.0);

    // same seed, byte-identical output
    const auto first = slurp(dir / "out/candidates.jsonl");
    RunConfig cfg2 = cfg;
    cfg2.output_dir = dir / "out2";
    REQUIRE(cmd_assemble(cfg2) == kOk);
    CHECK(slurp(dir / "out2/candidates.jsonl") == first);

    // prob 0 keeps every gold
    RunConfig cfg3 = cfg;
    cfg3.output_dir = dir / "out3";
    cfg3.assembly.no_answer_prob = 0.0;
    REQUIRE(cmd_assemble(cfg3) == kOk);
    for (const auto& cs : retrieval::load_candidate_sets(dir / "out3/candidates.jsonl")) {
        CHECK(cs.has_gold);
    }
}

TEST_CASE("cmd_evaluate with the gold-echo mock is perfect") {
    const auto dir = testfix::fresh_dir("eval_gold");
    eval_dataset(dir / "ds");

    RunConfig cfg;
    cfg.dataset_dir = dir / "ds";
    cfg.output_dir = dir / "out";
    MockConfig mock;
    mock.builtin = "gold_echo";
    cfg.mock = mock;

    SUBCASE("single mode") {
        REQUIRE(cmd_evaluate(cfg) == kOk);
        const auto rep = evaluate::report_from_json(
            nlohmann::json::parse(slurp(dir / "out/report.json")));
        CHECK(rep.macro_bbx == 100.0);
        CHECK(rep.macro_ans == 100.0);
        for (const auto& [cat, cell] : rep.categories) {
            CHECK(cell.bbx_pct == 100.0);
            CHECK(cell.ans_pct == 100.0);
        }
        CHECK(std::filesystem::exists(dir / "out/raw_responses.jsonl"));
        CHECK(std::filesystem::exists(dir / "out/results.jsonl"));
        CHECK(std::filesystem::exists(dir / "out/scores.jsonl"));
        CHECK(std::filesystem::exists(dir / "out/report.txt"));
    }

    SUBCASE("multi_full mode with a no-gold set") {
        const auto loaded = corpus::load_dataset(dir / "ds");
        write_candidates(loaded.dataset, dir / "candidates.jsonl", {"ex3"});
        cfg.mode = evaluate::ReportMode::multi_full;
        cfg.candidates_path = dir / "candidates.jsonl";
        REQUIRE(cmd_evaluate(cfg) == kOk);
        const auto rep = evaluate::report_from_json(
            nlohmann::json::parse(slurp(dir / "out/report.json")));
        CHECK(rep.macro_bbx == 100.0);
        CHECK(rep.macro_ans == 100.0);
        CHECK(rep.scored == 3);
        CHECK(rep.no_gold_total == 1);
        CHECK(rep.no_answer_detection_pct() == 100.0);
        CHECK(slurp(dir / "out/report.txt").find("no-answer detection") !=
              std::string::npos);
    }

    SUBCASE("multi_oracle keeps the gold-present subset") {
        const auto loaded = corpus::load_dataset(dir / "ds");
        write_candidates(loaded.dataset, dir / "candidates.jsonl", {"ex3"});
        cfg.mode = evaluate::ReportMode::multi_oracle;
        cfg.candidates_path = dir / "candidates.jsonl";
        REQUIRE(cmd_evaluate(cfg) == kOk);
        const auto rep = evaluate::report_from_json(
            nlohmann::json::parse(slurp(dir / "out/report.json")));
        CHECK(rep.scored == 3);
        CHECK(rep.no_gold_total == 0);
        CHECK(rep.macro_bbx == 100.0);
    }
}

TEST_CASE("cmd_evaluate replay reproduces the live report byte for byte") {
    const auto dir = testfix::fresh_dir("eval_replay");
    eval_dataset(dir / "ds");

    RunConfig cfg;
    cfg.dataset_dir = dir / "ds";
    cfg.output_dir = dir / "live";
    MockConfig mock;
    mock.builtin = "gold_echo";
    cfg.mock = mock;
    REQUIRE(cmd_evaluate(cfg) == kOk);

    RunConfig replay = cfg;
    replay.mock.reset();
    replay.output_dir = dir / "replay";
    replay.replay_raw = dir / "live/raw_responses.jsonl";
    REQUIRE(cmd_evaluate(replay) == kOk);

    CHECK(slurp(dir / "replay/report.json") == slurp(dir / "live/report.json"));
    CHECK(slurp(dir / "replay/results.jsonl") == slurp(dir / "live/results.jsonl"));
    CHECK(slurp(dir / "replay/scores.jsonl") == slurp(dir / "live/scores.jsonl"));
}

TEST_CASE("cmd_evaluate scripted mock and shifted boxes") {
    const auto dir = testfix::fresh_dir("eval_script");
    const auto ds = eval_dataset(dir / "ds");

    // shift each gold box right by 40% of its width: IoU 0.6/1.4, under 0.5
    std::vector<std::string> lines;
    for (const auto& ex : ds.examples) {
        const auto& b = ex.gold_bbox;
        const int shift = static_cast<int>(b.width()) * 2 / 5;
        std::ostringstream resp;
        resp << "Answer: answer " << ex.example_id << "\nBounding Box: [("
             << static_cast<int>(b.x1) + shift << ", " << static_cast<int>(b.y1)
             << "), (" << static_cast<int>(b.x2) + shift << ", "
             << static_cast<int>(b.y2) << ")]";
        lines.push_back(nlohmann::json{{"example_id", ex.example_id},
                                       {"response", resp.str()}}
                            .dump());
    }
    testfix::write_lines(dir / "script.jsonl", lines);

    RunConfig cfg;
    cfg.dataset_dir = dir / "ds";
    cfg.output_dir = dir / "out";
    MockConfig mock;
    mock.script = dir / "script.jsonl";
    cfg.mock = mock;
    REQUIRE(cmd_evaluate(cfg) == kOk);

    const auto rep = evaluate::report_from_json(
        nlohmann::json::parse(slurp(dir / "out/report.json")));
    CHECK(rep.macro_ans == 100.0);
    CHECK(rep.macro_bbx == 0.0);
    CHECK(rep.triage_counts.at(evaluate::ErrorType::position_misalignment) == 4);
}

TEST_CASE("cmd_evaluate exit codes") {
    const auto dir = testfix::fresh_dir("eval_codes");

    SUBCASE("missing dataset is a validation failure") {
        RunConfig cfg;
        cfg.dataset_dir = dir / "nope";
        cfg.output_dir = dir / "out";
        MockConfig mock;
        mock.builtin = "gold_echo";
        cfg.mock = mock;
        CHECK(cmd_evaluate(cfg) == kValidationFailure);
    }

    SUBCASE("unreachable endpoint after retries is an endpoint failure") {
        eval_dataset(dir / "ds");
        testfix::write_lines(dir / "empty_script.jsonl", {});
        RunConfig cfg;
        cfg.dataset_dir = dir / "ds";
        cfg.output_dir = dir / "out";
        cfg.max_retries = 1;
        MockConfig mock;
        mock.script = dir / "empty_script.jsonl";
        cfg.mock = mock;
        CHECK(cmd_evaluate(cfg) == kEndpointFailure);
    }
}

TEST_CASE("cmd_report reprints a persisted report") {
    const auto dir = testfix::fresh_dir("report");
    eval_dataset(dir / "ds");
    RunConfig cfg;
    cfg.dataset_dir = dir / "ds";
    cfg.output_dir = dir / "out";
    MockConfig mock;
    mock.builtin = "gold_echo";
    cfg.mock = mock;
    REQUIRE(cmd_evaluate(cfg) == kOk);

    const auto table = slurp(dir / "out/report.txt");
    std::filesystem::remove(dir / "out/report.txt");
    REQUIRE(cmd_report(cfg) == kOk);
    CHECK(slurp(dir / "out/report.txt") == table);

    RunConfig empty;
    empty.output_dir = dir / "missing";
    CHECK(cmd_report(empty) == kValidationFailure);
}

TEST_CASE("cmd_render builds a gallery from persisted responses") {
    const auto dir = testfix::fresh_dir("cmd_render");
    const auto ds = eval_dataset(dir / "ds");

    std::vector<std::string> lines;
    for (const auto& ex : ds.examples) {
        const auto& b = ex.gold_bbox;
        const int shift = static_cast<int>(b.width()) * 2 / 5;
        std::ostringstream resp;
        resp << "Answer: answer " << ex.example_id << "\nBounding Box: [("
             << static_cast<int>(b.x1) + shift << ", " << static_cast<int>(b.y1)
             << "), (" << static_cast<int>(b.x2) + shift << ", "
             << static_cast<int>(b.y2) << ")]";
        lines.push_back(nlohmann::json{{"example_id", ex.example_id},
                                       {"response", resp.str()}}
                            .dump());
    }
    testfix::write_lines(dir / "script.jsonl", lines);

    RunConfig cfg;
    cfg.dataset_dir = dir / "ds";
    cfg.output_dir = dir / "out";
    MockConfig mock;
    mock.script = dir / "script.jsonl";
    cfg.mock = mock;
    REQUIRE(cmd_evaluate(cfg) == kOk);
    REQUIRE(cmd_render(cfg) == kOk);
    CHECK(std::filesystem::exists(dir / "out/gallery/gallery.jsonl"));
    CHECK(std::filesystem::exists(dir / "out/gallery/position_misalignment/ex0.png"));
}

TEST_CASE("http client and mock server speak the same wire dialect") {
    const auto dir = testfix::fresh_dir("wire");
    testfix::write_image(dir / "img.png", 64, 64);

    std::string seen_system, seen_text;
    int seen_images = 0;
    chat::MockChatServer server([&](const chat::ChatRequest& req) {
        seen_system = req.system;
        seen_images = static_cast<int>(req.image_count());
        for (const auto& seg : req.user) {
            if (seg.kind == chat::Segment::Kind::text) seen_text += seg.text;
        }
        return std::string("Answer: 42\nBounding Box: [(1, 2), (3, 4)]");
    });

    chat::EndpointConfig ecfg;
    ecfg.url = server.url();
    chat::HttpChatClient client(ecfg);

    chat::ChatRequest req;
    req.system = "sys prompt";
    req.user.push_back(chat::Segment::make_image((dir / "img.png").string()));
    req.user.push_back(chat::Segment::make_text(" Image Size: (64, 64)\nQuestion: q"));
    const auto resp = client.generate(req);
    CHECK(resp == "Answer: 42\nBounding Box: [(1, 2), (3, 4)]");
    CHECK(seen_system == "sys prompt");
    CHECK(seen_images == 1);
    CHECK(seen_text.find("Question: q") != std::string::npos);
}
