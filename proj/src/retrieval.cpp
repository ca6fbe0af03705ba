#include "visa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "visa/errors.hpp"

namespace visa::retrieval {

using nlohmann::json;

void EmbeddingIndex::add(EmbeddingRecord rec) {
    if (!records_.empty() && rec.vector.size() != dim()) {
        throw ValidationError("embedding dimension mismatch for " + rec.doc_id);
    }
    double sq = 0.0;
    for (double v : rec.vector) sq += v * v;
    if (sq == 0.0) throw ValidationError("zero-norm embedding for " + rec.doc_id);
    norms_.push_back(std::sqrt(sq));
    records_.push_back(std::move(rec));
}

EmbeddingIndex EmbeddingIndex::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    EmbeddingIndex idx;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line);
        idx.add({j.at("doc_id").get<std::string>(),
                 j.at("vector").get<std::vector<double>>()});
    }
    return idx;
}

std::vector<ScoredDoc> EmbeddingIndex::top_k(const std::vector<double>& query,
                                             std::size_t k) const {
    if (query.size() != dim()) {
        throw ValidationError("query dimension " + std::to_string(query.size()) +
                              " does not match index dimension " + std::to_string(dim()));
    }
    double qsq = 0.0;
    for (double v : query) qsq += v * v;
    const double qnorm = std::sqrt(qsq);
    if (qnorm == 0.0) throw ValidationError("zero-norm query");

    std::vector<ScoredDoc> scored;
    scored.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        double dot = 0.0;
        const auto& v = records_[i].vector;
        for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * query[d];
        scored.push_back({records_[i].doc_id, dot / (norms_[i] * qnorm)});
    }
    auto cmp = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), cmp);
    scored.resize(n);
    return scored;
}

CandidateSet assemble_candidates(const corpus::AttributionExample& ex,
                                 const std::vector<ScoredDoc>& ranked,
                                 const AssemblyConfig& cfg) {
    // Negative pool: all non-gold doc_ids within the top-k.
    std::vector<std::string> pool;
    for (const auto& sd : ranked) {
        if (static_cast<int>(pool.size()) >= cfg.k) break;
        if (sd.doc_id != ex.gold_doc_id) pool.push_back(sd.doc_id);
    }
    // Replacement of gold needs one extra distinct negative.
    const int needed = cfg.no_answer_prob > 0.0 ? cfg.m : cfg.m - 1;
    if (static_cast<int>(pool.size()) < needed) {
        throw ValidationError("insufficient distinct negatives for " + ex.example_id +
                              ": pool " + std::to_string(pool.size()) + ", need " +
                              std::to_string(needed));
    }

    Rng rng(derive_seed(cfg.seed, ex.example_id));

    // Partial Fisher-Yates: draw m-1 negatives without replacement, keep the
    // remainder available for the no-answer replacement draw.
    std::vector<std::string> negatives;
    for (int i = 0; i < cfg.m - 1; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        negatives.push_back(pool[i]);
    }

    const int slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.m)));
    const bool replace_gold = rng.bernoulli(cfg.no_answer_prob);

    CandidateSet cs;
    cs.example_id = ex.example_id;
    std::string gold = ex.gold_doc_id;
    if (replace_gold) {
        const std::size_t base = cfg.m - 1;
        const std::size_t j = base + rng.below(pool.size() - base);
        gold = pool[j];
        cs.has_gold = false;
    } else {
        cs.has_gold = true;
        cs.gold_slot = slot + 1;
    }
    cs.docs = negatives;
    cs.docs.insert(cs.docs.begin() + slot, gold);
    return cs;
}

json candidate_set_to_json(const CandidateSet& cs) {
    json j;
    j["example_id"] = cs.example_id;
    j["docs"] = cs.docs;
    j["has_gold"] = cs.has_gold;
    if (cs.gold_slot) j["gold_slot"] = *cs.gold_slot;
    return j;
}

CandidateSet candidate_set_from_json(const json& j) {
    CandidateSet cs;
    cs.example_id = j.at("example_id").get<std::string>();
    cs.docs = j.at("docs").get<std::vector<std::string>>();
    cs.has_gold = j.at("has_gold").get<bool>();
    if (j.contains("gold_slot")) cs.gold_slot = j["gold_slot"].get<int>();
    if (cs.has_gold != cs.gold_slot.has_value()) {
        throw ValidationError("gold_slot must be present iff has_gold");
    }
    if (cs.gold_slot && (*cs.gold_slot < 1 || *cs.gold_slot > static_cast<int>(cs.docs.size()))) {
        throw ValidationError("gold_slot out of range");
    }
    return cs;
}

std::vector<CandidateSet> load_candidate_sets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<CandidateSet> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(candidate_set_from_json(json::parse(line)));
    }
    return out;
}

void write_candidate_sets(const std::vector<CandidateSet>& sets,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& cs : sets) out << candidate_set_to_json(cs).dump() << "\n";
}

}  // namespace visa::retrieval
