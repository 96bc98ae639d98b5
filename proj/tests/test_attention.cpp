#include <cmath>
#include <vector>

#include "doctest.h"
#include "fnetsum/attention.hpp"
#include "fnetsum/common.hpp"
#include "fnetsum/tensor.hpp"
#include "test_util.hpp"

using namespace fnetsum;
using testutil::max_grad_rel_diff;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// Plain-loop multi-head attention oracle, sharing no code with the library.
Mat oracle_attention(const Mat& queries, const Mat& context, const Mat& wq, const Mat& wk,
                     const Mat& wv, const Mat& wo, std::size_t heads, bool causal) {
    const std::size_t t = queries.size(), s = context.size(), d = queries[0].size();
    const std::size_t dh = d / heads;
    const Mat q = mat_mul(queries, wq), k = mat_mul(context, wk), v = mat_mul(context, wv);
    Mat concat(t, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < t; ++i) {
            std::vector<double> scores(s, 0.0);
            for (std::size_t j = 0; j < s; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c)
                    dot += q[i][h * dh + c] * k[j][h * dh + c];
                scores[j] = dot / std::sqrt(static_cast<double>(dh));
                if (causal && j > i) scores[j] = -1e30;
            }
            double mx = scores[0];
            for (double sc : scores) mx = std::max(mx, sc);
            double z = 0.0;
            std::vector<double> w(s);
            for (std::size_t j = 0; j < s; ++j) {
                w[j] = std::exp(scores[j] - mx);
                z += w[j];
            }
            for (std::size_t j = 0; j < s; ++j) w[j] /= z;
            for (std::size_t c = 0; c < dh; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) acc += w[j] * v[j][h * dh + c];
                concat[i][h * dh + c] = acc;
            }
        }
    }
    return mat_mul(concat, wo);
}

}  // namespace

TEST_CASE("make_attention_params shapes and scaling") {
    Rng rng(42);
    AttentionParams p = make_attention_params(8, 2, rng);
    CHECK(p.head_count == 2);
    for (const Tensor* t : {&p.w_q, &p.w_k, &p.w_v, &p.w_o}) {
        CHECK(t->rows() == 8);
        CHECK(t->cols() == 8);
        CHECK(t->requires_grad());
        const double bound = 1.0 / std::sqrt(8.0);
        for (double v : t->values()) {
            CHECK(v <= bound);
            CHECK(v >= -bound);
        }
    }
}

TEST_CASE("multi_head_attention matches the plain-loop oracle") {
    Rng rng(5);
    const std::size_t t = 4, s = 3, d = 6, heads = 2;
    Tensor queries = uniform_init({t, d}, 1.0, rng);
    Tensor context = uniform_init({s, d}, 1.0, rng);
    AttentionParams params = make_attention_params(d, heads, rng);
    Tensor out = multi_head_attention(queries, context, params, false);
    REQUIRE(out.rows() == t);
    REQUIRE(out.cols() == d);
    const Mat expected =
        oracle_attention(to_mat(queries), to_mat(context), to_mat(params.w_q),
                         to_mat(params.w_k), to_mat(params.w_v), to_mat(params.w_o), heads,
                         false);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(out.at(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
}

TEST_CASE("causal self-attention matches the oracle and is bitwise causal") {
    Rng rng(9);
    const std::size_t t = 5, d = 4, heads = 2;
    Tensor x = uniform_init({t, d}, 1.0, rng);
    AttentionParams params = make_attention_params(d, heads, rng);
    Tensor out = multi_head_attention(x, x, params, true);
    const Mat expected = oracle_attention(to_mat(x), to_mat(x), to_mat(params.w_q),
                                          to_mat(params.w_k), to_mat(params.w_v),
                                          to_mat(params.w_o), heads, true);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(out.at(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));

    // Future rows cannot influence earlier outputs, exactly.
    Tensor x2 = x.detached_copy();
    for (std::size_t j = 0; j < d; ++j) x2.at(t - 1, j) = 100.0;
    Tensor out2 = multi_head_attention(x2, x2, params, true);
    for (std::size_t i = 0; i + 1 < t; ++i)
        for (std::size_t j = 0; j < d; ++j) CHECK(out.at(i, j) == out2.at(i, j));
}

TEST_CASE("uniform scores average the values") {
    // Zero queries give uniform attention weights: output = mean of projected
    // values, which makes the expected result easy to state.
    const std::size_t s = 3, d = 2;
    Tensor queries = Tensor::zeros({1, d});
    Rng rng(13);
    Tensor context = uniform_init({s, d}, 1.0, rng);
    AttentionParams params;
    params.head_count = 1;
    params.w_q = Tensor::from({d, d}, {1, 0, 0, 1});
    params.w_k = Tensor::from({d, d}, {1, 0, 0, 1});
    params.w_v = Tensor::from({d, d}, {1, 0, 0, 1});
    params.w_o = Tensor::from({d, d}, {1, 0, 0, 1});
    Tensor out = multi_head_attention(queries, context, params, false);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < s; ++i) mean += context.at(i, j);
        mean /= static_cast<double>(s);
        CHECK(out.at(0, j) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("gradient: multi_head_attention, cross and causal") {
    Rng rng(21);
    const std::size_t t = 3, s = 4, d = 4, heads = 2;
    Tensor queries = uniform_init({t, d}, 1.0, rng);
    Tensor context = uniform_init({s, d}, 1.0, rng);
    AttentionParams params = make_attention_params(d, heads, rng);
    Tensor w = uniform_init({t, d}, 1.0, rng).detached_copy();
    std::vector<Tensor> all{queries, context, params.w_q, params.w_k, params.w_v, params.w_o};
    const double err = max_grad_rel_diff(
        [&] { return sum(mul(multi_head_attention(queries, context, params, false), w)); }, all);
    CHECK(err < 1e-4);

    Tensor self_input = uniform_init({t, d}, 1.0, rng);
    Tensor w_self = uniform_init({t, d}, 1.0, rng).detached_copy();
    std::vector<Tensor> self_params{self_input, params.w_q, params.w_k, params.w_v, params.w_o};
    const double causal_err = max_grad_rel_diff(
        [&] {
            return sum(mul(multi_head_attention(self_input, self_input, params, true), w_self));
        },
        self_params);
    CHECK(causal_err < 1e-4);
}

TEST_CASE("multi_head_attention validation") {
    Rng rng(1);
    AttentionParams params = make_attention_params(4, 2, rng);
    Tensor q = Tensor::zeros({3, 4});
    CHECK_THROWS_AS(multi_head_attention(Tensor::zeros({3, 6}), q, params, false),
                    DimensionError);
    CHECK_THROWS_AS(multi_head_attention(q, Tensor::zeros({2, 4}), params, true),
                    DimensionError);  // causal needs equal lengths
    AttentionParams bad = params;
    bad.head_count = 3;  // does not divide d_model
    CHECK_THROWS_AS(multi_head_attention(q, q, bad, false), DimensionError);
}
