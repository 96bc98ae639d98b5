#pragma once

#include <cstddef>

#include "fnetsum/tensor.hpp"

namespace fnetsum {

/// Projection weights of one attention layer, each [d_model x d_model].
struct AttentionParams {
    Tensor w_q;
    Tensor w_k;
    Tensor w_v;
    Tensor w_o;
    std::size_t head_count = 1;
};

AttentionParams make_attention_params(std::size_t d_model, std::size_t head_count, Rng& rng);

/// Scaled dot-product multi-head attention built from taped primitives, so
/// gradients flow without a dedicated backward rule.
///
/// queries: [T x d_model], context: [S x d_model] (keys and values are both
/// projected from it). With causal_mask = true, position t only attends to
/// context positions <= t, which requires T == S.
Tensor multi_head_attention(const Tensor& queries, const Tensor& context,
                            const AttentionParams& params, bool causal_mask);

}  // namespace fnetsum
