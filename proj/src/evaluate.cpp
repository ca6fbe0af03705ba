#include "visa/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "visa/textmatch.hpp"

namespace visa::evaluate {

using nlohmann::json;

std::string to_string(ErrorType t) {
    switch (t) {
        case ErrorType::none: return "none";
        case ErrorType::wrong_source_attribution: return "wrong_source_attribution";
        case ErrorType::position_misalignment: return "position_misalignment";
        case ErrorType::granularity_mismatch: return "granularity_mismatch";
    }
    return "?";
}

ErrorType error_type_from_string(const std::string& s) {
    if (s == "none") return ErrorType::none;
    if (s == "wrong_source_attribution") return ErrorType::wrong_source_attribution;
    if (s == "position_misalignment") return ErrorType::position_misalignment;
    if (s == "granularity_mismatch") return ErrorType::granularity_mismatch;
    throw ValidationError("unknown error type: " + s);
}

std::string to_string(ReportMode m) {
    switch (m) {
        case ReportMode::single: return "single";
        case ReportMode::multi_oracle: return "multi_oracle";
        case ReportMode::multi_full: return "multi_full";
    }
    return "?";
}

ReportMode report_mode_from_string(const std::string& s) {
    if (s == "single") return ReportMode::single;
    if (s == "multi_oracle") return ReportMode::multi_oracle;
    if (s == "multi_full") return ReportMode::multi_full;
    throw ValidationError("unknown report mode: " + s);
}

ErrorType triage_error(const attrgen::ModelOutput& out,
                       const corpus::AttributionExample& ex,
                       const retrieval::CandidateSet* cands, const Thresholds& th) {
    if (cands && out.evidence_index && cands->gold_slot &&
        *out.evidence_index != *cands->gold_slot) {
        return ErrorType::wrong_source_attribution;
    }
    if (!out.bbox) return ErrorType::wrong_source_attribution;

    const geom::BBox& pred = *out.bbox;
    const geom::BBox& gold = ex.gold_bbox;

    // Granularity first: one box is (almost) inside the other, a cell in a
    // table or an item in a list rather than the whole element.
    const double ix = std::max(0.0, std::min(pred.x2, gold.x2) - std::max(pred.x1, gold.x1));
    const double iy = std::max(0.0, std::min(pred.y2, gold.y2) - std::max(pred.y1, gold.y1));
    const double inter = ix * iy;
    const double smaller = std::min(pred.area(), gold.area());
    if (smaller > 0 && inter / smaller >= th.containment) {
        return ErrorType::granularity_mismatch;
    }

    const double overlap = geom::iou(pred, gold);
    if (overlap >= th.triage_low) return ErrorType::position_misalignment;
    if (!gold.contains_point(pred.center_x(), pred.center_y())) {
        return ErrorType::wrong_source_attribution;
    }
    return ErrorType::position_misalignment;
}

ExampleScore score_example(const attrgen::ModelOutput& out,
                           const corpus::AttributionExample& ex,
                           const retrieval::CandidateSet* cands, const Thresholds& th) {
    ExampleScore s;
    s.example_id = ex.example_id;
    s.gold_present = !cands || cands->has_gold;

    if (!s.gold_present) {
        const bool abstained = out.kind == attrgen::OutputKind::no_answer;
        s.ans_correct = abstained;
        s.bbx_correct = abstained;
        return s;
    }

    if (out.kind != attrgen::OutputKind::answered) return s;

    s.ans_correct = out.answer && textmatch::relaxed_em(*out.answer, ex.answers);
    if (cands) {
        s.evidence_correct =
            out.evidence_index && cands->gold_slot && *out.evidence_index == *cands->gold_slot;
    }
    if (out.bbox) s.iou = geom::iou(*out.bbox, ex.gold_bbox);

    const bool right_doc = !cands || (s.evidence_correct && *s.evidence_correct);
    s.bbx_correct = right_doc && s.iou && *s.iou >= th.iou;
    if (!s.bbx_correct) s.triage = triage_error(out, ex, cands, th);
    return s;
}

double macro_average(const std::vector<double>& category_pcts) {
    if (category_pcts.empty()) return 0.0;
    double sum = 0.0;
    for (double v : category_pcts) sum += v;
    return sum / static_cast<double>(category_pcts.size());
}

Report aggregate(const std::vector<ExampleScore>& scores,
                 const std::map<std::string, corpus::AttributionExample>& examples,
                 ReportMode mode, bool multi_page, const Thresholds& th) {
    Report rep;
    rep.mode = mode;
    rep.thresholds = th;

    const std::vector<corpus::Category> universe =
        multi_page ? std::vector<corpus::Category>{corpus::Category::passage_first_page,
                                                   corpus::Category::passage_beyond_first_page,
                                                   corpus::Category::non_passage}
                   : std::vector<corpus::Category>{corpus::Category::passage,
                                                   corpus::Category::non_passage};

    struct Tally {
        int n = 0;
        int bbx = 0;
        int ans = 0;
    };
    std::map<corpus::Category, Tally> tallies;

    for (const auto& s : scores) {
        if (!s.gold_present) {
            ++rep.no_gold_total;
            if (s.ans_correct) ++rep.no_gold_correct;
            continue;
        }
        auto it = examples.find(s.example_id);
        if (it == examples.end()) {
            throw ValidationError("score for unknown example: " + s.example_id);
        }
        auto& t = tallies[it->second.category];
        ++t.n;
        if (s.bbx_correct) ++t.bbx;
        if (s.ans_correct) ++t.ans;
        ++rep.scored;
        if (s.triage != ErrorType::none) ++rep.triage_counts[s.triage];
    }

    std::vector<double> bbx_pcts, ans_pcts;
    for (const auto cat : universe) {
        auto it = tallies.find(cat);
        if (it == tallies.end() || it->second.n == 0) {
            rep.warnings.push_back("category " + corpus::to_string(cat) +
                                   " has no examples; excluded from macro average");
            continue;
        }
        CategoryCell cell;
        cell.count = it->second.n;
        cell.bbx_pct = 100.0 * it->second.bbx / it->second.n;
        cell.ans_pct = 100.0 * it->second.ans / it->second.n;
        rep.categories[cat] = cell;
        bbx_pcts.push_back(cell.bbx_pct);
        ans_pcts.push_back(cell.ans_pct);
    }
    rep.macro_bbx = macro_average(bbx_pcts);
    rep.macro_ans = macro_average(ans_pcts);
    return rep;
}

namespace {

std::string pct(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v;
    return os.str();
}

}  // namespace

std::string format_report_table(const Report& report) {
    std::vector<std::string> headers{"Average"};
    std::vector<std::pair<double, double>> cells{{report.macro_bbx, report.macro_ans}};
    for (const auto& [cat, cell] : report.categories) {
        headers.push_back(corpus::to_string(cat));
        cells.emplace_back(cell.bbx_pct, cell.ans_pct);
    }

    constexpr int w = 12;
    std::size_t hw = 14;
    for (const auto& h : headers) hw = std::max(hw, h.size() + 2);
    const int cw = static_cast<int>(hw);

    std::ostringstream os;
    os << "Mode: " << to_string(report.mode) << "\n";
    os << std::left << std::setw(w) << "";
    for (const auto& h : headers) os << std::setw(cw) << h;
    os << "\n" << std::setw(w) << "";
    for (std::size_t i = 0; i < headers.size(); ++i) {
        os << std::setw(cw / 2) << "bbx" << std::setw(cw - cw / 2) << "ans";
    }
    os << "\n" << std::setw(w) << "accuracy";
    for (const auto& [bbx, ans] : cells) {
        os << std::setw(cw / 2) << pct(bbx) << std::setw(cw - cw / 2) << pct(ans);
    }
    os << "\n";
    if (report.mode == ReportMode::multi_full) {
        os << "no-answer detection: " << pct(report.no_answer_detection_pct()) << " ("
           << report.no_gold_correct << "/" << report.no_gold_total << ")\n";
    }
    if (report.mode == ReportMode::multi_oracle) {
        os << "note: query set identical to single mode (directly comparable)\n";
    }
    for (const auto& wmsg : report.warnings) os << "warning: " << wmsg << "\n";
    return os.str();
}

json report_to_json(const Report& report) {
    json cats = json::object();
    for (const auto& [cat, cell] : report.categories) {
        cats[corpus::to_string(cat)] = {
            {"count", cell.count}, {"bbx", cell.bbx_pct}, {"ans", cell.ans_pct}};
    }
    json triage = json::object();
    for (const auto& [t, n] : report.triage_counts) triage[to_string(t)] = n;
    return json{{"mode", to_string(report.mode)},
                {"categories", cats},
                {"macro", {{"bbx", report.macro_bbx}, {"ans", report.macro_ans}}},
                {"scored", report.scored},
                {"no_answer_detection",
                 {{"total", report.no_gold_total},
                  {"correct", report.no_gold_correct},
                  {"pct", report.no_answer_detection_pct()}}},
                {"triage", triage},
                {"thresholds",
                 {{"iou", report.thresholds.iou},
                  {"triage_low", report.thresholds.triage_low},
                  {"containment", report.thresholds.containment}}},
                {"warnings", report.warnings}};
}

Report report_from_json(const json& j) {
    Report rep;
    rep.mode = report_mode_from_string(j.at("mode").get<std::string>());
    for (const auto& [name, cell] : j.at("categories").items()) {
        CategoryCell c;
        c.count = cell.at("count").get<int>();
        c.bbx_pct = cell.at("bbx").get<double>();
        c.ans_pct = cell.at("ans").get<double>();
        rep.categories[corpus::category_from_string(name)] = c;
    }
    rep.macro_bbx = j.at("macro").at("bbx").get<double>();
    rep.macro_ans = j.at("macro").at("ans").get<double>();
    rep.scored = j.at("scored").get<int>();
    rep.no_gold_total = j.at("no_answer_detection").at("total").get<int>();
    rep.no_gold_correct = j.at("no_answer_detection").at("correct").get<int>();
    for (const auto& [name, n] : j.at("triage").items()) {
        rep.triage_counts[error_type_from_string(name)] = n.get<int>();
    }
    rep.thresholds.iou = j.at("thresholds").at("iou").get<double>();
    rep.thresholds.triage_low = j.at("thresholds").at("triage_low").get<double>();
    rep.thresholds.containment = j.at("thresholds").at("containment").get<double>();
    rep.warnings = j.at("warnings").get<std::vector<std::string>>();
    return rep;
}

json score_to_json(const ExampleScore& s) {
    json j;
    j["example_id"] = s.example_id;
    j["gold_present"] = s.gold_present;
    j["ans_correct"] = s.ans_correct;
    j["bbx_correct"] = s.bbx_correct;
    if (s.iou) j["iou"] = *s.iou;
    if (s.evidence_correct) j["evidence_correct"] = *s.evidence_correct;
    if (s.triage != ErrorType::none) j["triage"] = to_string(s.triage);
    return j;
}

void write_scores(const std::vector<ExampleScore>& scores,
                  const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& s : scores) out << score_to_json(s).dump() << "\n";
}

}  // namespace visa::evaluate
