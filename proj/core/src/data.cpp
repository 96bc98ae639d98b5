#include "fnetsum/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fnetsum {

namespace {

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

void append_chunk_tokens(std::string_view chunk, std::vector<std::string>& out) {
    // Peel leading punctuation characters.
    std::size_t begin = 0;
    while (begin < chunk.size() && is_punct(static_cast<unsigned char>(chunk[begin]))) {
        out.emplace_back(1, chunk[begin]);
        ++begin;
    }
    // Find the end of the core, remembering what got peeled off the tail.
    std::size_t end = chunk.size();
    while (end > begin && is_punct(static_cast<unsigned char>(chunk[end - 1]))) --end;
    if (end > begin) out.emplace_back(chunk.substr(begin, end - begin));
    for (std::size_t i = end; i < chunk.size(); ++i) out.emplace_back(1, chunk[i]);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::string lowered(text);
    for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
        std::size_t j = i;
        while (j < lowered.size() && !std::isspace(static_cast<unsigned char>(lowered[j]))) ++j;
        if (j > i) append_chunk_tokens(std::string_view(lowered).substr(i, j - i), out);
        i = j;
    }
    return out;
}

Vocabulary::Vocabulary() {
    for (const char* t : {"<pad>", "<unk>", "<bos>", "<eos>"}) add(t);
}

TokenId Vocabulary::add(const std::string& token) {
    auto [it, inserted] = token_to_id_.try_emplace(token, static_cast<TokenId>(id_to_token_.size()));
    if (inserted) id_to_token_.push_back(token);
    return it->second;
}

TokenId Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw IndexError("vocabulary: id " + std::to_string(id) + " out of range for size " +
                         std::to_string(id_to_token_.size()));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.find(token) != token_to_id_.end();
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids,
                                            bool skip_reserved) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
        if (skip_reserved && id >= 0 && id <= kEosId) continue;
        out.push_back(token(id));
    }
    return out;
}

TokenizedCorpus load_tokenized_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file '" + path + "'");
    TokenizedCorpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("article") || !rec.contains("abstract") ||
            !rec["article"].is_string() || !rec["abstract"].is_string()) {
            ++corpus.skipped;
            continue;
        }
        TokenizedDocument doc;
        doc.article = tokenize(rec["article"].get<std::string>());
        doc.abstract = tokenize(rec["abstract"].get<std::string>());
        if (doc.article.empty() || doc.abstract.empty()) {
            ++corpus.skipped;
            continue;
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Vocabulary build_vocab(const TokenizedCorpus& corpus, std::size_t min_freq, std::size_t max_size) {
    if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be at least 1");
    if (corpus.documents.empty()) throw ConfigError("build_vocab: empty corpus");
    std::unordered_map<std::string, std::size_t> freq;
    for (const TokenizedDocument& doc : corpus.documents) {
        for (const std::string& t : doc.article) ++freq[t];
        for (const std::string& t : doc.abstract) ++freq[t];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    for (const auto& [token, count] : ranked) {
        if (count < min_freq) break;
        if (vocab.size() >= max_size) break;
        vocab.add(token);
    }
    return vocab;
}

std::vector<Example> encode_corpus(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                                   std::size_t max_src_len, std::size_t max_tgt_len) {
    if (max_src_len < 1 || max_tgt_len < 3) {
        throw ConfigError("encode_corpus: need max_src_len >= 1 and max_tgt_len >= 3 "
                          "(BOS + token + EOS)");
    }
    std::vector<Example> out;
    out.reserve(corpus.documents.size());
    for (const TokenizedDocument& doc : corpus.documents) {
        Example ex;
        ex.article = vocab.encode(doc.article);
        if (ex.article.size() > max_src_len) ex.article.resize(max_src_len);
        std::vector<TokenId> tgt = vocab.encode(doc.abstract);
        if (tgt.size() > max_tgt_len - 2) tgt.resize(max_tgt_len - 2);
        ex.abstract.reserve(tgt.size() + 2);
        ex.abstract.push_back(kBosId);
        ex.abstract.insert(ex.abstract.end(), tgt.begin(), tgt.end());
        ex.abstract.push_back(kEosId);
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<Example> load_corpus(const std::string& path, const Vocabulary& vocab,
                                 std::size_t max_src_len, std::size_t max_tgt_len) {
    return encode_corpus(load_tokenized_corpus(path), vocab, max_src_len, max_tgt_len);
}

double unk_rate(const std::vector<Example>& examples) {
    std::size_t unk = 0, total = 0;
    for (const Example& ex : examples) {
        for (const std::vector<TokenId>* seq : {&ex.article, &ex.abstract}) {
            for (TokenId id : *seq) {
                if (id == kPadId || id == kBosId || id == kEosId) continue;
                ++total;
                if (id == kUnkId) ++unk;
            }
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(unk) / static_cast<double>(total);
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

FieldStats describe(std::vector<double> samples) {
    FieldStats s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    double total = 0.0;
    for (double v : samples) total += v;
    s.mean = total / static_cast<double>(samples.size());
    double sq = 0.0;
    for (double v : samples) sq += (v - s.mean) * (v - s.mean);
    s.stddev = samples.size() > 1 ? std::sqrt(sq / static_cast<double>(samples.size() - 1)) : 0.0;
    s.min = samples.front();
    s.max = samples.back();
    s.p25 = percentile(samples, 0.25);
    s.p50 = percentile(samples, 0.50);
    s.p75 = percentile(samples, 0.75);
    return s;
}

std::string format_stats_table(const std::vector<std::string>& names,
                               const std::vector<FieldStats>& stats) {
    if (names.size() != stats.size()) {
        throw DimensionError("format_stats_table: " + std::to_string(names.size()) +
                             " names for " + std::to_string(stats.size()) + " stat sets");
    }
    const char* row_labels[] = {"count", "mean", "std", "min", "25%", "50%", "75%", "max"};
    auto cell = [](const FieldStats& s, std::size_t row) {
        char buf[64];
        if (row == 0) {
            std::snprintf(buf, sizeof(buf), "%zu", s.count);
        } else {
            const double v[] = {0.0, s.mean, s.stddev, s.min, s.p25, s.p50, s.p75, s.max};
            std::snprintf(buf, sizeof(buf), "%.2f", v[row]);
        }
        return std::string(buf);
    };
    std::vector<std::size_t> widths(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
        widths[c] = names[c].size();
        for (std::size_t r = 0; r < 8; ++r) widths[c] = std::max(widths[c], cell(stats[c], r).size());
    }
    std::size_t label_w = 5;
    std::ostringstream out;
    out << std::string(label_w, ' ');
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << "  " << std::string(widths[c] - names[c].size(), ' ') << names[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < 8; ++r) {
        std::string label = row_labels[r];
        out << label << std::string(label_w - label.size(), ' ');
        for (std::size_t c = 0; c < names.size(); ++c) {
            const std::string v = cell(stats[c], r);
            out << "  " << std::string(widths[c] - v.size(), ' ') << v;
        }
        out << '\n';
    }
    return out.str();
}

PretrainedEmbeddings load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                                std::size_t d) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file '" + path + "'");
    PretrainedEmbeddings emb;
    emb.matrix = Tensor::zeros({vocab.size(), d});
    emb.covered.assign(vocab.size(), 0);
    std::string line;
    std::size_t line_no = 0;
    bool width_checked = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string word;
        row >> word;
        std::vector<double> values;
        values.reserve(d);
        std::string field;
        while (row >> field) {
            try {
                std::size_t consumed = 0;
                values.push_back(std::stod(field, &consumed));
                if (consumed != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw ParseError("embeddings line " + std::to_string(line_no) +
                                 ": bad float '" + field + "'");
            }
        }
        if (!width_checked) {
            if (values.size() != d) {
                throw ConfigError("embeddings file width " + std::to_string(values.size()) +
                                  " does not match d_model " + std::to_string(d));
            }
            width_checked = true;
        } else if (values.size() != d) {
            throw ParseError("embeddings line " + std::to_string(line_no) + ": expected " +
                             std::to_string(d) + " values, got " +
                             std::to_string(values.size()));
        }
        if (!vocab.contains(word)) continue;
        const auto idx = static_cast<std::size_t>(vocab.id(word));
        if (emb.covered[idx]) continue;  // first occurrence wins
        for (std::size_t j = 0; j < d; ++j) emb.matrix.at(idx, j) = values[j];
        emb.covered[idx] = 1;
        ++emb.covered_count;
    }
    return emb;
}

}  // namespace fnetsum
