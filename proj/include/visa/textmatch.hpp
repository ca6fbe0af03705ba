#pragma once

#include <string>
#include <vector>

namespace visa::textmatch {

/// Non-empty list of acceptable gold answers.
using AnswerSet = std::vector<std::string>;

/// Lowercase, collapse whitespace runs to single spaces, trim, and strip
/// terminal periods.
std::string normalize_text(const std::string& s);

/// Relaxed exact match: after normalization, one of {pred, gold} is a
/// contiguous substring of the other and their lengths differ by at most
/// max_len_diff characters.
bool relaxed_em_single(const std::string& pred, const std::string& gold,
                       int max_len_diff = 20);

/// True iff pred matches any answer in the set.
bool relaxed_em(const std::string& pred, const AnswerSet& gold, int max_len_diff = 20);

}  // namespace visa::textmatch
