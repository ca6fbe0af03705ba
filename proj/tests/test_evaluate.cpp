#include <doctest.h>

#include "fixtures.hpp"
#include "visa/evaluate.hpp"

using namespace visa;
using namespace visa::evaluate;

namespace {

corpus::AttributionExample make_example(const std::string& id,
                                        corpus::Category cat =
                                            corpus::Category::passage_first_page) {
    corpus::AttributionExample ex;
    ex.example_id = id;
    ex.query = "q";
    ex.answers = {"Paris"};
    ex.gold_doc_id = "doc0";
    ex.gold_bbox = geom::BBox(100, 100, 300, 200);
    ex.category = cat;
    return ex;
}

attrgen::ModelOutput answered(const std::string& answer, geom::BBox bbox,
                              std::optional<int> evidence = std::nullopt) {
    attrgen::ModelOutput out;
    out.kind = attrgen::OutputKind::answered;
    out.answer = answer;
    out.bbox = bbox;
    out.evidence_index = evidence;
    return out;
}

retrieval::CandidateSet with_gold(int slot) {
    retrieval::CandidateSet cs;
    cs.docs = {"a", "b", "c"};
    cs.has_gold = true;
    cs.gold_slot = slot;
    return cs;
}

}  // namespace

TEST_CASE("perfect prediction scores both correct") {
    const auto ex = make_example("e1");
    const auto s = score_example(answered("Paris", ex.gold_bbox), ex, nullptr);
    CHECK(s.ans_correct);
    CHECK(s.bbx_correct);
    CHECK(s.iou == doctest::Approx(1.0));
    CHECK(s.triage == ErrorType::none);
}

TEST_CASE("iou below threshold fails bbx but not ans") {
    const auto ex = make_example("e1");
    // shifted: gold (100,100,300,200); pred (160,100,360,200): inter 140x100,
    // union 260x100 -> IoU ~0.538; shift further for ~0.4
    const auto s = score_example(answered("Paris", geom::BBox(186, 100, 386, 200)), ex,
                                 nullptr);
    CHECK(s.ans_correct);
    CHECK_FALSE(s.bbx_correct);
    REQUIRE(s.iou.has_value());
    CHECK(*s.iou < 0.5);
    CHECK(*s.iou > 0.1);
    CHECK(s.triage == ErrorType::position_misalignment);
}

TEST_CASE("multi mode requires the right evidence document") {
    const auto ex = make_example("e1");
    const auto cs = with_gold(2);
    const auto right = score_example(answered("Paris", ex.gold_bbox, 2), ex, &cs);
    CHECK(right.bbx_correct);
    CHECK(right.evidence_correct == true);

    // perfect box on the wrong candidate scores bbx false
    const auto wrong = score_example(answered("Paris", ex.gold_bbox, 1), ex, &cs);
    CHECK(wrong.ans_correct);
    CHECK_FALSE(wrong.bbx_correct);
    CHECK(wrong.evidence_correct == false);
    CHECK(wrong.triage == ErrorType::wrong_source_attribution);
}

TEST_CASE("gold absent: only the no-answer sentinel scores") {
    const auto ex = make_example("e1");
    retrieval::CandidateSet cs;
    cs.docs = {"a", "b", "c"};
    cs.has_gold = false;

    attrgen::ModelOutput no_ans;
    no_ans.kind = attrgen::OutputKind::no_answer;
    const auto s = score_example(no_ans, ex, &cs);
    CHECK(s.ans_correct);
    CHECK(s.bbx_correct);
    CHECK_FALSE(s.gold_present);

    const auto s2 = score_example(answered("Paris", ex.gold_bbox, 1), ex, &cs);
    CHECK_FALSE(s2.ans_correct);
    CHECK_FALSE(s2.bbx_correct);
}

TEST_CASE("unparseable scores false on both") {
    const auto ex = make_example("e1");
    attrgen::ModelOutput out;
    out.kind = attrgen::OutputKind::unparseable;
    const auto s = score_example(out, ex, nullptr);
    CHECK_FALSE(s.ans_correct);
    CHECK_FALSE(s.bbx_correct);
    CHECK_FALSE(s.iou.has_value());
}

TEST_CASE("triage taxonomy") {
    const auto ex = make_example("e1");  // gold (100,100,300,200)

    SUBCASE("distant box is wrong source attribution") {
        const auto t = triage_error(answered("x", geom::BBox(500, 500, 600, 600)), ex,
                                    nullptr);
        CHECK(t == ErrorType::wrong_source_attribution);
    }
    SUBCASE("moderate overlap is position misalignment") {
        const auto t = triage_error(answered("x", geom::BBox(186, 100, 386, 200)), ex,
                                    nullptr);
        CHECK(t == ErrorType::position_misalignment);
    }
    SUBCASE("cell inside the gold table is granularity mismatch") {
        // tiny box fully inside gold: containment ratio 1 >= 0.9
        const auto t = triage_error(answered("x", geom::BBox(120, 120, 160, 140)), ex,
                                    nullptr);
        CHECK(t == ErrorType::granularity_mismatch);
    }
    SUBCASE("gold fully inside a huge prediction is granularity mismatch") {
        const auto t = triage_error(answered("x", geom::BBox(0, 0, 900, 900)), ex,
                                    nullptr);
        CHECK(t == ErrorType::granularity_mismatch);
    }
    SUBCASE("assignment is total over random failing boxes") {
        Rng rng(5);
        int assigned = 0;
        for (int i = 0; i < 500; ++i) {
            const int x1 = static_cast<int>(rng.below(900));
            const int y1 = static_cast<int>(rng.below(900));
            const geom::BBox pred(x1, y1, x1 + 1 + rng.below(100), y1 + 1 + rng.below(100));
            if (geom::iou(pred, ex.gold_bbox) >= 0.5) continue;
            const auto t = triage_error(answered("x", pred), ex, nullptr);
            CHECK(t != ErrorType::none);
            ++assigned;
        }
        CHECK(assigned > 400);
    }
}

TEST_CASE("macro average is the unweighted category mean") {
    CHECK(macro_average({70.0, 18.7, 23.8}) == doctest::Approx(37.5).epsilon(1e-12));
    CHECK(macro_average({100.0, 0.0}) == 50.0);
    CHECK(macro_average({}) == 0.0);
}

TEST_CASE("aggregate builds category cells and macro") {
    std::map<std::string, corpus::AttributionExample> examples;
    std::vector<ExampleScore> scores;
    int n = 0;
    auto add = [&](corpus::Category cat, bool bbx, bool ans) {
        const auto id = "e" + std::to_string(n++);
        examples.emplace(id, make_example(id, cat));
        ExampleScore s;
        s.example_id = id;
        s.bbx_correct = bbx;
        s.ans_correct = ans;
        scores.push_back(s);
    };
    // two categories at 100% and 0% bbx, unequal sizes -> macro 50 regardless
    add(corpus::Category::passage_first_page, true, true);
    for (int i = 0; i < 9; ++i) add(corpus::Category::non_passage, false, true);

    const auto rep = aggregate(scores, examples, ReportMode::single, true);
    CHECK(rep.macro_bbx == 50.0);
    CHECK(rep.macro_ans == 100.0);
    CHECK(rep.categories.at(corpus::Category::passage_first_page).count == 1);
    CHECK(rep.categories.at(corpus::Category::non_passage).count == 9);
    // the third multi-page category is absent and warned about
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].find("passage_beyond_first_page") != std::string::npos);
}

TEST_CASE("aggregate accounts no-gold examples separately") {
    std::map<std::string, corpus::AttributionExample> examples;
    std::vector<ExampleScore> scores;
    for (int i = 0; i < 4; ++i) {
        const auto id = "g" + std::to_string(i);
        examples.emplace(id, make_example(id));
        ExampleScore s;
        s.example_id = id;
        s.bbx_correct = true;
        s.ans_correct = true;
        scores.push_back(s);
    }
    ExampleScore ng;
    ng.example_id = "n0";
    ng.gold_present = false;
    ng.ans_correct = true;
    ng.bbx_correct = true;
    scores.push_back(ng);

    const auto rep = aggregate(scores, examples, ReportMode::multi_full, true);
    CHECK(rep.scored == 4);
    CHECK(rep.no_gold_total == 1);
    CHECK(rep.no_gold_correct == 1);
    CHECK(rep.no_answer_detection_pct() == 100.0);
}

TEST_CASE("report table and json round trip") {
    std::map<std::string, corpus::AttributionExample> examples;
    std::vector<ExampleScore> scores;
    int n = 0;
    auto add = [&](corpus::Category cat, bool bbx) {
        const auto id = "e" + std::to_string(n++);
        examples.emplace(id, make_example(id, cat));
        ExampleScore s;
        s.example_id = id;
        s.bbx_correct = bbx;
        s.ans_correct = true;
        if (!bbx) s.triage = ErrorType::position_misalignment;
        scores.push_back(s);
    };
    add(corpus::Category::passage_first_page, true);
    add(corpus::Category::passage_beyond_first_page, false);
    add(corpus::Category::non_passage, true);

    const auto rep = aggregate(scores, examples, ReportMode::multi_full, true);
    const auto table = format_report_table(rep);
    CHECK(table.find("Average") != std::string::npos);
    CHECK(table.find("66.7") != std::string::npos);  // macro bbx at one decimal
    CHECK(table.find("no-answer detection") != std::string::npos);

    const auto back = report_from_json(report_to_json(rep));
    CHECK(back.mode == rep.mode);
    CHECK(back.macro_bbx == rep.macro_bbx);
    CHECK(back.macro_ans == rep.macro_ans);
    CHECK(back.categories.size() == rep.categories.size());
    CHECK(back.triage_counts == rep.triage_counts);
    CHECK(format_report_table(back) == table);
}
