#include "visa/textmatch.hpp"

#include <cctype>
#include <cstdlib>

namespace visa::textmatch {

std::string normalize_text(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

bool relaxed_em_single(const std::string& pred, const std::string& gold,
                       int max_len_diff) {
    const std::string p = normalize_text(pred);
    const std::string g = normalize_text(gold);
    if (p.empty() || g.empty()) return false;
    const auto diff = std::llabs(static_cast<long long>(p.size()) -
                                 static_cast<long long>(g.size()));
    if (diff > max_len_diff) return false;
    const std::string& longer = p.size() >= g.size() ? p : g;
    const std::string& shorter = p.size() >= g.size() ? g : p;
    return longer.find(shorter) != std::string::npos;
}

bool relaxed_em(const std::string& pred, const AnswerSet& gold, int max_len_diff) {
    for (const auto& g : gold) {
        if (relaxed_em_single(pred, g, max_len_diff)) return true;
    }
    return false;
}

}  // namespace visa::textmatch
