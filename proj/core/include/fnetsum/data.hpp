#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fnetsum/tensor.hpp"

namespace fnetsum {

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kEosId = 3;

/// Lowercases, splits on whitespace, and peels leading/trailing punctuation
/// characters off each chunk as single-character tokens. Interior
/// punctuation (hyphens, decimal points, apostrophes) stays put.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
  public:
    /// Seeds the four reserved symbols at ids 0..3.
    Vocabulary();

    TokenId add(const std::string& token);  // returns existing id if present
    TokenId id(const std::string& token) const;  // kUnkId for unknown tokens
    const std::string& token(TokenId id) const;
    bool contains(const std::string& token) const;
    std::size_t size() const { return id_to_token_.size(); }

    std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<TokenId>& ids,
                                    bool skip_reserved = true) const;
    const std::vector<std::string>& tokens() const { return id_to_token_; }

  private:
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;
};

/// One (article, abstract) pair as token ids. The abstract is framed as
/// [BOS, tokens..., EOS].
struct Example {
    std::vector<TokenId> article;
    std::vector<TokenId> abstract;
};

struct TokenizedDocument {
    std::vector<std::string> article;
    std::vector<std::string> abstract;
};

struct TokenizedCorpus {
    std::vector<TokenizedDocument> documents;
    std::size_t skipped = 0;  // records missing a field or empty after tokenizing
};

/// Reads line-delimited JSON records with `article` and `abstract` text
/// fields. Records missing a field (or empty after tokenization) are skipped
/// and counted; a line that is not valid JSON raises ParseError with its
/// line number; an unreadable file raises IoError.
TokenizedCorpus load_tokenized_corpus(const std::string& path);

/// Reserved tokens first, then tokens with frequency >= min_freq ranked by
/// descending frequency (ties broken lexicographically), truncated so the
/// whole vocabulary holds at most max_size entries.
Vocabulary build_vocab(const TokenizedCorpus& corpus, std::size_t min_freq = 1,
                       std::size_t max_size = std::numeric_limits<std::size_t>::max());

/// Encodes and truncates: articles to max_src_len tokens, abstracts to
/// max_tgt_len ids including the BOS/EOS frame.
std::vector<Example> encode_corpus(const TokenizedCorpus& corpus, const Vocabulary& vocab,
                                   std::size_t max_src_len, std::size_t max_tgt_len);

/// load_tokenized_corpus + encode_corpus in one step.
std::vector<Example> load_corpus(const std::string& path, const Vocabulary& vocab,
                                 std::size_t max_src_len, std::size_t max_tgt_len);

/// Fraction of non-reserved positions mapped to UNK.
double unk_rate(const std::vector<Example>& examples);

struct FieldStats {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double max = 0.0;
};

/// Descriptive statistics of a list of token counts; quartiles use linear
/// interpolation between order statistics.
FieldStats describe(std::vector<double> samples);

/// Aligned table with one column per named field and the eight summary rows.
std::string format_stats_table(const std::vector<std::string>& names,
                               const std::vector<FieldStats>& stats);

struct PretrainedEmbeddings {
    Tensor matrix;                      // [vocab x d]; zero rows where not covered
    std::vector<std::uint8_t> covered;  // per vocab id
    std::size_t covered_count = 0;

    double coverage() const {
        return covered.empty() ? 0.0
                               : static_cast<double>(covered_count) /
                                     static_cast<double>(covered.size());
    }
};

/// Text embeddings, one `word v1 ... v_d` row per line. The first row fixes
/// the width: if it disagrees with d, ConfigError; a later row with a
/// different count raises ParseError naming the line.
PretrainedEmbeddings load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                                std::size_t d);

}  // namespace fnetsum
