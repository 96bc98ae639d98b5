#include "fnetsum/attention.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fnetsum {

AttentionParams make_attention_params(std::size_t d_model, std::size_t head_count, Rng& rng) {
    if (head_count == 0 || d_model % head_count != 0) {
        throw ConfigError("attention: hidden width " + std::to_string(d_model) +
                          " not divisible into " + std::to_string(head_count) + " heads");
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
    AttentionParams p;
    p.w_q = uniform_init({d_model, d_model}, bound, rng);
    p.w_k = uniform_init({d_model, d_model}, bound, rng);
    p.w_v = uniform_init({d_model, d_model}, bound, rng);
    p.w_o = uniform_init({d_model, d_model}, bound, rng);
    p.head_count = head_count;
    return p;
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& context,
                            const AttentionParams& params, bool causal_mask) {
    if (queries.rank() != 2 || context.rank() != 2 || queries.cols() != context.cols()) {
        throw DimensionError("attention: incompatible shapes " + shape_str(queries.shape()) +
                             " and " + shape_str(context.shape()));
    }
    const std::size_t heads = params.head_count;
    const bool causal = causal_mask;
    const std::size_t d = queries.cols();
    if (heads == 0 || d % heads != 0) {
        throw DimensionError("attention: hidden width " + std::to_string(d) +
                             " not divisible into " + std::to_string(heads) + " heads");
    }
    if (params.w_q.rows() != d || params.w_q.cols() != d) {
        throw DimensionError("attention: projection shape " + shape_str(params.w_q.shape()) +
                             " does not match hidden width " + std::to_string(d));
    }
    if (causal && queries.rows() != context.rows()) {
        throw DimensionError("attention: causal masking needs equal lengths, got " +
                             shape_str(queries.shape()) + " and " + shape_str(context.shape()));
    }
    const std::size_t dh = d / heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = matmul(queries, params.w_q);
    Tensor k = matmul(context, params.w_k);
    Tensor v = matmul(context, params.w_v);

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dh);
        if (causal) scores = causal_mask_fill(scores);
        Tensor weights = softmax(scores, -1);
        head_outputs.push_back(matmul(weights, vh));
    }
    return matmul(concat_cols(head_outputs), params.w_o);
}

}  // namespace fnetsum
