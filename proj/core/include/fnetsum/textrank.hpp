#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fnetsum {

/// Splits on sentence-final . ! ? followed by whitespace and a capital or
/// digit; a guard list of common abbreviations ("fig.", "et al.", ...)
/// suppresses false splits.
std::vector<std::string> split_sentences(std::string_view text);

/// Mihalcea-Tarau overlap: |shared distinct tokens| / (log|s1| + log|s2|),
/// defined as 0 when either sentence has at most one token.
double sentence_similarity(const std::vector<std::string>& s1,
                           const std::vector<std::string>& s2);

struct SentenceGraph {
    std::vector<std::string> sentences;                   // original text
    std::vector<std::vector<std::string>> sentence_tokens;
    std::vector<double> weights;  // n x n, symmetric, zero diagonal

    std::size_t size() const { return sentences.size(); }
    double weight(std::size_t i, std::size_t j) const { return weights[i * size() + j]; }
};

SentenceGraph build_sentence_graph(const std::vector<std::string>& sentences);

/// Weighted PageRank over the similarity graph. Scores are normalized to sum
/// to 1; nodes without edges end up with teleport mass only. Raises
/// ConvergenceError (reporting the residual) when max_iter passes without
/// the L1 change dropping below tol.
std::vector<double> pagerank(const SentenceGraph& graph, double damping = 0.85,
                             double tol = 1e-6, std::size_t max_iter = 100);

struct ExtractResult {
    std::string text;
    std::vector<std::size_t> picked;  // sentence indices, ascending
    std::size_t original_tokens = 0;
    std::size_t extracted_tokens = 0;
    double ratio = 0.0;
};

/// Keeps the ceil(ratio * #sentences) top-scored sentences in document
/// order; score ties break toward the earlier sentence.
ExtractResult extract(std::string_view text, double ratio);

}  // namespace fnetsum
