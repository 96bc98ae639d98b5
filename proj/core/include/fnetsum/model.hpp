#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fnetsum/attention.hpp"
#include "fnetsum/data.hpp"
#include "fnetsum/fourier.hpp"
#include "fnetsum/tensor.hpp"

namespace fnetsum {

enum class ModelVariant { kFnetTransformer, kHybridFnet, kFourierFnet };

/// Accepts the CLI spellings fnet | hybrid | fourier.
ModelVariant parse_variant(std::string_view name);
std::string_view variant_name(ModelVariant variant);

struct ModelConfig {
    ModelVariant variant = ModelVariant::kFnetTransformer;
    std::size_t d_model = 200;
    std::size_t d_ff = 9000;
    std::size_t mixing_heads = 20;
    std::size_t layers = 2;
    FourierComponent component = FourierComponent::kReal;
    std::size_t vocab_size = 0;
    std::size_t max_src_len = 512;
    std::size_t max_tgt_len = 128;
    bool causal_rescale = true;
    std::uint64_t seed = 42;

    void validate() const;  // ConfigError on any violated invariant

    /// One `key=value` line per field, keys in alphabetical order. This text
    /// is what checkpoints embed and hash.
    std::string canonical_text() const;
    std::uint64_t hash() const { return fnv1a64(canonical_text()); }
};

/// Inverse of canonical_text(); unknown or missing keys raise ParseError.
ModelConfig parse_model_config(const std::string& canonical_text);

struct FeedForward {
    Tensor w1, b1;  // [d x d_ff], [d_ff]
    Tensor w2, b2;  // [d_ff x d], [d]
};

struct LayerNormParams {
    Tensor gain, bias;  // [d]
};

struct EncoderBlock {
    FeedForward ffn;
    LayerNormParams norm1, norm2;
};

struct DecoderBlock {
    std::optional<AttentionParams> junction_attention;  // HybridFnet only
    FeedForward ffn;
    LayerNormParams norm1, norm2, norm3;
};

class Model {
  public:
    /// Builds all parameters from config.seed; rows of `pretrained` flagged
    /// as covered overwrite the matching embedding rows.
    static Model build(const ModelConfig& config,
                       const PretrainedEmbeddings* pretrained = nullptr);

    const ModelConfig& config() const { return config_; }

    /// Logits [|tgt| x vocab] where row t scores the prediction of tgt[t]
    /// given src and tgt[0..t-1]; the decoder consumes the BOS-shifted
    /// target. tgt is the sequence to predict (no leading BOS, normally
    /// ending in EOS).
    Tensor forward_teacher_forced(const std::vector<TokenId>& src,
                                  const std::vector<TokenId>& tgt) const;

    /// Same network, but starting from already-embedded (and, for
    /// FourierFnet, pre-transformed) input matrices.
    Tensor forward_from_inputs(const Tensor& src_input, const Tensor& tgt_input) const;

    /// Input representation fed to the stacks: embeddings + positions, plus
    /// the outer Fourier pre-transform when variant == FourierFnet.
    Tensor input_representation(const std::vector<TokenId>& ids, bool is_target) const;

    /// Greedy argmax decoding from BOS until EOS, max_len tokens, or the
    /// configured max_tgt_len, whichever comes first. The returned sequence
    /// excludes BOS and EOS.
    std::vector<TokenId> generate(const std::vector<TokenId>& src, std::size_t max_len) const;

    /// Every persistent tensor (including non-trainable ones like the frozen
    /// FourierFnet embedding), with stable names for checkpointing. The
    /// returned handles share storage with the model.
    std::vector<std::pair<std::string, Tensor>> named_tensors() const;

    /// Tensors the optimizer may update (requires_grad only).
    std::vector<Tensor> trainable_parameters() const;
    std::size_t parameter_count() const;  // trainable scalars

    const Tensor& embedding() const { return embedding_; }

  private:
    Model() = default;

    Tensor encode(const Tensor& src_input) const;
    Tensor decode(const Tensor& encoder_out, const Tensor& tgt_input) const;

    ModelConfig config_;
    Tensor embedding_;   // [vocab x d_model]
    Tensor positions_;   // [max(max_src_len, max_tgt_len) x d_model], fixed
    std::vector<EncoderBlock> encoder_;
    std::vector<DecoderBlock> decoder_;
    Tensor output_projection_;  // [d_model x vocab]
};

/// Sinusoidal table, rows = positions, cols = d_model.
Tensor sinusoidal_positions(std::size_t max_len, std::size_t d_model);

/// Pre-transformed inputs for every example of a FourierFnet corpus.
struct FourierPrecompute {
    std::vector<Tensor> src_inputs;
    std::vector<Tensor> tgt_inputs;  // decoder-input matrices (BOS-shifted)
};

/// Computes (or reloads from `cache_dir`, keyed by the config hash) the outer
/// transforms of every example. variant != FourierFnet -> ConfigError.
/// An empty cache_dir disables the disk cache.
FourierPrecompute precompute_fourier_inputs(const Model& model,
                                            const std::vector<Example>& examples,
                                            const std::string& cache_dir);

}  // namespace fnetsum
