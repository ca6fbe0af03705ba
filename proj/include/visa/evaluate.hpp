#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visa/attrgen.hpp"
#include "visa/corpus.hpp"
#include "visa/retrieval.hpp"

namespace visa::evaluate {

enum class ErrorType {
    none,
    wrong_source_attribution,
    position_misalignment,
    granularity_mismatch,
};

std::string to_string(ErrorType t);
ErrorType error_type_from_string(const std::string& s);

enum class ReportMode { single, multi_oracle, multi_full };

std::string to_string(ReportMode m);
ReportMode report_mode_from_string(const std::string& s);

struct Thresholds {
    double iou = 0.5;          // correctness threshold
    double triage_low = 0.1;   // below: wrong source attribution
    double containment = 0.9;  // intersection / smaller-box area for granularity
};

struct ExampleScore {
    std::string example_id;
    bool gold_present = true;
    bool ans_correct = false;
    bool bbx_correct = false;
    std::optional<double> iou;
    std::optional<bool> evidence_correct;
    ErrorType triage = ErrorType::none;
};

struct CategoryCell {
    int count = 0;
    double bbx_pct = 0.0;
    double ans_pct = 0.0;
};

struct Report {
    ReportMode mode = ReportMode::single;
    std::map<corpus::Category, CategoryCell> categories;
    double macro_bbx = 0.0;
    double macro_ans = 0.0;
    int scored = 0;  // gold-present examples in the category cells
    // No-gold examples are accounted here, never in the category cells.
    int no_gold_total = 0;
    int no_gold_correct = 0;
    std::map<ErrorType, int> triage_counts;
    Thresholds thresholds;
    std::vector<std::string> warnings;

    double no_answer_detection_pct() const {
        return no_gold_total == 0 ? 0.0 : 100.0 * no_gold_correct / no_gold_total;
    }
};

ExampleScore score_example(const attrgen::ModelOutput& out,
                           const corpus::AttributionExample& ex,
                           const retrieval::CandidateSet* cands,
                           const Thresholds& th = {});

/// Heuristic failure classification for an answered, gold-present,
/// bbx-incorrect output. Granularity is checked first.
ErrorType triage_error(const attrgen::ModelOutput& out,
                       const corpus::AttributionExample& ex,
                       const retrieval::CandidateSet* cands,
                       const Thresholds& th = {});

/// Unweighted mean of category percentages, the Table-1 Average column.
double macro_average(const std::vector<double>& category_pcts);

/// Fold scores into per-category accuracies and macro averages. The
/// category universe comes from the dataset definition (multi_page), not
/// from which categories happen to appear; empty categories are dropped
/// from the macro with a warning.
Report aggregate(const std::vector<ExampleScore>& scores,
                 const std::map<std::string, corpus::AttributionExample>& examples,
                 ReportMode mode, bool multi_page, const Thresholds& th = {});

/// Fixed-width plain-text table, columns Average then per-category, each
/// with bbx and ans at one decimal place.
std::string format_report_table(const Report& report);

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

nlohmann::json score_to_json(const ExampleScore& s);
void write_scores(const std::vector<ExampleScore>& scores,
                  const std::filesystem::path& path);

}  // namespace visa::evaluate
