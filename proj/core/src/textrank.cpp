#include "fnetsum/textrank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fnetsum/common.hpp"
#include "fnetsum/data.hpp"

namespace fnetsum {

namespace {

const char* kAbbreviations[] = {"fig.",  "figs.", "eq.",  "eqs.", "al.",  "e.g.", "i.e.",
                                "etc.",  "vs.",   "cf.",  "dr.",  "mr.",  "mrs.", "ms.",
                                "prof.", "no.",   "vol.", "sec.", "ref.", "refs."};

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// The whitespace-delimited chunk ending at position `end` (exclusive).
std::string_view trailing_chunk(std::string_view text, std::size_t end) {
    std::size_t begin = end;
    while (begin > 0 && !std::isspace(static_cast<unsigned char>(text[begin - 1]))) --begin;
    return text.substr(begin, end - begin);
}

bool is_guarded_abbreviation(std::string_view chunk) {
    const std::string lowered = lowercase(chunk);
    for (const char* abbr : kAbbreviations) {
        if (lowered == abbr) return true;
    }
    return false;
}

std::string_view trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            // Swallow a run of sentence-final punctuation.
            std::size_t end = i + 1;
            while (end < text.size() &&
                   (text[end] == '.' || text[end] == '!' || text[end] == '?')) {
                ++end;
            }
            std::size_t next = end;
            while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next]))) {
                ++next;
            }
            const bool at_end = next >= text.size();
            const bool starts_new = !at_end && next > end &&
                                    (std::isupper(static_cast<unsigned char>(text[next])) ||
                                     std::isdigit(static_cast<unsigned char>(text[next])));
            const bool guarded =
                c == '.' && end == i + 1 && is_guarded_abbreviation(trailing_chunk(text, end));
            if ((at_end || starts_new) && !guarded) {
                const std::string_view s = trimmed(text.substr(start, end - start));
                if (!s.empty()) sentences.emplace_back(s);
                start = next;
                i = next;
                continue;
            }
            i = end;
            continue;
        }
        ++i;
    }
    const std::string_view tail = trimmed(text.substr(start));
    if (!tail.empty()) sentences.emplace_back(tail);
    return sentences;
}

double sentence_similarity(const std::vector<std::string>& s1,
                           const std::vector<std::string>& s2) {
    if (s1.size() <= 1 || s2.size() <= 1) return 0.0;
    const std::unordered_set<std::string> set1(s1.begin(), s1.end());
    std::unordered_set<std::string> seen;
    std::size_t shared = 0;
    for (const std::string& t : s2) {
        if (set1.count(t) && seen.insert(t).second) ++shared;
    }
    return static_cast<double>(shared) /
           (std::log(static_cast<double>(s1.size())) + std::log(static_cast<double>(s2.size())));
}

SentenceGraph build_sentence_graph(const std::vector<std::string>& sentences) {
    SentenceGraph g;
    g.sentences = sentences;
    g.sentence_tokens.reserve(sentences.size());
    for (const std::string& s : sentences) g.sentence_tokens.push_back(tokenize(s));
    const std::size_t n = sentences.size();
    g.weights.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = sentence_similarity(g.sentence_tokens[i], g.sentence_tokens[j]);
            g.weights[i * n + j] = w;
            g.weights[j * n + i] = w;
        }
    }
    return g;
}

std::vector<double> pagerank(const SentenceGraph& graph, double damping, double tol,
                             std::size_t max_iter) {
    const std::size_t n = graph.size();
    if (n == 0) throw ConfigError("pagerank: empty graph");
    if (damping < 0.0 || damping >= 1.0) {
        throw ConfigError("pagerank: damping must lie in [0, 1)");
    }
    std::vector<double> out_sum(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) out_sum[j] += graph.weight(j, k);
    }
    std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
    const double teleport = (1.0 - damping) / static_cast<double>(n);
    double residual = 0.0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double rank = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (out_sum[j] > 0.0) rank += graph.weight(j, i) / out_sum[j] * p[j];
            }
            next[i] = teleport + damping * rank;
        }
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - p[i]);
        p.swap(next);
        if (residual < tol) {
            const double total = std::accumulate(p.begin(), p.end(), 0.0);
            for (double& v : p) v /= total;
            return p;
        }
    }
    throw ConvergenceError("pagerank: no convergence after " + std::to_string(max_iter) +
                           " iterations, residual " + std::to_string(residual));
}

ExtractResult extract(std::string_view text, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw ConfigError("extract: ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    ExtractResult result;
    result.ratio = ratio;
    result.original_tokens = tokenize(text).size();
    const std::vector<std::string> sentences = split_sentences(text);
    if (sentences.empty()) throw ConfigError("extract: no sentences in input text");
    const SentenceGraph graph = build_sentence_graph(sentences);
    const std::vector<double> scores = pagerank(graph);
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(sentences.size())));
    std::vector<std::size_t> order(sentences.size());
    std::iota(order.begin(), order.end(), 0);
    // Ties break toward the earlier sentence; stable_sort keeps index order.
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(keep, order.size()));
    std::sort(order.begin(), order.end());
    result.picked = order;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) result.text += ' ';
        result.text += sentences[order[i]];
    }
    result.extracted_tokens = tokenize(result.text).size();
    return result;
}

}  // namespace fnetsum
