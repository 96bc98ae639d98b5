#include "fnetsum/rouge.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "fnetsum/common.hpp"

namespace fnetsum {

namespace {

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// n-grams keyed by joining tokens with a separator no tokenizer emits.
std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          std::size_t n) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, std::size_t n) {
    if (n < 1) throw ConfigError("rouge_n: n must be at least 1");
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
    std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    RougeScore s;
    s.precision = cand_total > 0 ? static_cast<double>(overlap) / static_cast<double>(cand_total)
                                 : 0.0;
    s.recall =
        ref_total > 0 ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
    const std::size_t l = lcs_length(candidate, reference);
    RougeScore s;
    s.precision =
        candidate.empty() ? 0.0 : static_cast<double>(l) / static_cast<double>(candidate.size());
    s.recall =
        reference.empty() ? 0.0 : static_cast<double>(l) / static_cast<double>(reference.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

CorpusRouge score_corpus(const std::vector<std::vector<std::string>>& candidates,
                         const std::vector<std::vector<std::string>>& references) {
    if (candidates.size() != references.size()) {
        throw DimensionError("score_corpus: " + std::to_string(candidates.size()) +
                             " candidates vs " + std::to_string(references.size()) +
                             " references");
    }
    if (candidates.empty()) throw ConfigError("score_corpus: empty corpus");
    CorpusRouge total;
    auto accumulate = [](RougeScore& into, const RougeScore& s) {
        into.precision += s.precision;
        into.recall += s.recall;
        into.f1 += s.f1;
    };
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        accumulate(total.rouge1, rouge_n(candidates[i], references[i], 1));
        accumulate(total.rouge2, rouge_n(candidates[i], references[i], 2));
        accumulate(total.rouge3, rouge_n(candidates[i], references[i], 3));
        accumulate(total.rougeL, rouge_l(candidates[i], references[i]));
    }
    if (!candidates.empty()) {
        const double n = static_cast<double>(candidates.size());
        for (RougeScore* s : {&total.rouge1, &total.rouge2, &total.rouge3, &total.rougeL}) {
            s->precision /= n;
            s->recall /= n;
            s->f1 /= n;
        }
    }
    return total;
}

std::string format_rouge_report(
    const std::vector<std::pair<std::string, CorpusRouge>>& rows) {
    const char* headers[] = {"Model", "Rouge-1", "Rouge-2", "Rouge-3", "Rouge-L"};
    std::size_t model_width = 5;
    for (const auto& [name, scores] : rows) model_width = std::max(model_width, name.size());
    auto cell = [](double f1) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", f1 * 100.0);
        return std::string(buf);
    };
    std::ostringstream out;
    out << headers[0] << std::string(model_width - 5, ' ');
    for (int c = 1; c < 5; ++c) out << "  " << headers[c];
    out << '\n';
    for (const auto& [name, scores] : rows) {
        out << name << std::string(model_width - name.size(), ' ');
        const double values[] = {scores.rouge1.f1, scores.rouge2.f1, scores.rouge3.f1,
                                 scores.rougeL.f1};
        for (int c = 0; c < 4; ++c) {
            const std::string v = cell(values[c]);
            // Right-align under the 7-character header.
            out << "  " << std::string(7 - std::min<std::size_t>(7, v.size()), ' ') << v;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace fnetsum
