#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fnetsum {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Clipped n-gram overlap: each distinct n-gram counts min(candidate count,
/// reference count) times. Empty n-gram sets score 0.
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, std::size_t n);

/// Longest-common-subsequence variant (dynamic programming).
RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Macro averages over candidate/reference pairs.
struct CorpusRouge {
    RougeScore rouge1, rouge2, rouge3, rougeL;
};

CorpusRouge score_corpus(const std::vector<std::vector<std::string>>& candidates,
                         const std::vector<std::vector<std::string>>& references);

/// Aligned text table, columns Model,Rouge-1,Rouge-2,Rouge-3,Rouge-L, F1
/// values scaled by 100 with one decimal.
std::string format_rouge_report(
    const std::vector<std::pair<std::string, CorpusRouge>>& rows);

}  // namespace fnetsum
