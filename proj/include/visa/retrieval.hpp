#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visa/corpus.hpp"
#include "visa/rng.hpp"

namespace visa::retrieval {

struct EmbeddingRecord {
    std::string doc_id;
    std::vector<double> vector;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
    bool operator==(const ScoredDoc&) const = default;
};

/// Exact cosine search over an in-memory embedding table. Immutable after
/// build; concurrent top_k is safe.
class EmbeddingIndex {
public:
    void add(EmbeddingRecord rec);
    static EmbeddingIndex load_jsonl(const std::filesystem::path& path);

    std::size_t size() const { return records_.size(); }
    std::size_t dim() const { return records_.empty() ? 0 : records_[0].vector.size(); }

    /// Exactly min(k, size) results, descending cosine score, ties broken
    /// by doc_id ascending.
    std::vector<ScoredDoc> top_k(const std::vector<double>& query, std::size_t k) const;

private:
    std::vector<EmbeddingRecord> records_;
    std::vector<double> norms_;
};

struct AssemblyConfig {
    int k = 20;                   // candidate pool depth
    int m = 3;                    // candidates shown to the model
    double no_answer_prob = 0.2;  // gold-replacement probability
    std::uint64_t seed = 0;
};

struct CandidateSet {
    std::string example_id;
    std::vector<std::string> docs;      // size m, all distinct
    std::optional<int> gold_slot;       // 1-based, present iff has_gold
    bool has_gold = false;
};

/// Mix m-1 hard negatives from the ranked pool with the gold document at a
/// uniformly random slot; with probability no_answer_prob the gold is then
/// replaced by one more distinct negative. Deterministic given
/// (example_id, cfg.seed).
CandidateSet assemble_candidates(const corpus::AttributionExample& ex,
                                 const std::vector<ScoredDoc>& ranked,
                                 const AssemblyConfig& cfg);

nlohmann::json candidate_set_to_json(const CandidateSet& cs);
CandidateSet candidate_set_from_json(const nlohmann::json& j);

std::vector<CandidateSet> load_candidate_sets(const std::filesystem::path& path);
void write_candidate_sets(const std::vector<CandidateSet>& sets,
                          const std::filesystem::path& path);

}  // namespace visa::retrieval
