#include "fnetsum/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fnetsum {

namespace {

constexpr double kMaskValue = -1e30;

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got shape " +
                             shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

void record_if_tracked(bool tracked, std::function<void()> rule) {
    if (tracked && Tape::active() != nullptr) {
        Tape::active()->record(std::move(rule));
    }
}

bool tracked(const Tensor& t) {
    return t.requires_grad() && Tape::active() != nullptr;
}

}  // namespace

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out << " x ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

// --- Tensor -----------------------------------------------------------------

Tensor::Node& Tensor::node() const {
    if (!node_) throw IndexError("use of undefined tensor");
    return *node_;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value.assign(shape_size(node->shape), 0.0);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
    return full(std::move(shape), 1.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
        throw DimensionError("from: shape " + shape_str(shape) + " holds " +
                             std::to_string(shape_size(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node().shape; }
std::size_t Tensor::size() const { return node().value.size(); }
std::size_t Tensor::rank() const { return node().shape.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw IndexError("dim: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape()));
    }
    return node().shape[axis];
}

std::size_t Tensor::rows() const {
    require_rank2(*this, "rows");
    return node().shape[0];
}

std::size_t Tensor::cols() const {
    require_rank2(*this, "cols");
    return node().shape[1];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    }
    return node().value[0];
}

double Tensor::at(std::size_t i) const {
    if (i >= size()) throw IndexError("at: index " + std::to_string(i) + " out of range");
    return node().value[i];
}

double& Tensor::at(std::size_t i) {
    if (i >= size()) throw IndexError("at: index " + std::to_string(i) + " out of range");
    return node().value[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    require_rank2(*this, "at");
    if (i >= node().shape[0] || j >= node().shape[1]) {
        throw IndexError("at: (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range for shape " + shape_str(shape()));
    }
    return node().value[i * node().shape[1] + j];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    require_rank2(*this, "at");
    if (i >= node().shape[0] || j >= node().shape[1]) {
        throw IndexError("at: (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range for shape " + shape_str(shape()));
    }
    return node().value[i * node().shape[1] + j];
}

std::span<double> Tensor::values() const { return node().value; }

std::span<double> Tensor::grad() const {
    if (!node().requires_grad) throw IndexError("grad: tensor does not require grad");
    return node().grad;
}

void Tensor::zero_grad() {
    if (node().requires_grad) std::fill(node().grad.begin(), node().grad.end(), 0.0);
}

Tensor Tensor::detached_copy() const {
    return Tensor::from(shape(), std::vector<double>(node().value.begin(), node().value.end()));
}

// --- Tape -------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() {
    if (g_active_tape == this) g_active_tape = previous_;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward_rule) {
    entries_.push_back(std::move(backward_rule));
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw DimensionError("backward: loss of shape " + shape_str(loss.shape()) +
                             " is not a scalar");
    }
    if (!loss.requires_grad()) {
        throw ConfigError("backward: loss does not require grad");
    }
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    entries_.clear();
}

// --- ops --------------------------------------------------------------------

namespace {

Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad) {
    return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

// c[m x n] += a[m x k] * b[k x n], raw row-major buffers.
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[m x k] += a[m x n] * b^T where b is [k x n].
void gemm_bt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

// c[k x n] += a^T * b where a is [m x k], b is [m x n].
void gemm_at_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    gemm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
    const bool track = tracked(a) || tracked(b);
    Tensor result = make_result({m, n}, std::move(out), track);
    record_if_tracked(track, [a, b, result, m, k, n]() mutable {
        const double* dout = result.grad().data();
        if (a.requires_grad()) gemm_bt_acc(dout, b.values().data(), a.grad().data(), m, n, k);
        if (b.requires_grad()) gemm_at_acc(a.values().data(), dout, b.grad().data(), m, k, n);
    });
    return result;
}

Tensor transpose(const Tensor& x) {
    require_rank2(x, "transpose");
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values()[i * c + j];
    const bool track = tracked(x);
    Tensor result = make_result({c, r}, std::move(out), track);
    record_if_tracked(track, [x, result, r, c]() mutable {
        auto dx = x.grad();
        auto dout = result.grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += dout[j * r + i];
    });
    return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    const bool track = tracked(a) || tracked(b);
    Tensor result = make_result(a.shape(), std::move(out), track);
    record_if_tracked(track, [a, b, result]() mutable {
        auto dout = result.grad();
        if (a.requires_grad()) {
            auto da = a.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
        }
        if (b.requires_grad()) {
            auto db = b.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i];
        }
    });
    return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    const bool track = tracked(a) || tracked(b);
    Tensor result = make_result(a.shape(), std::move(out), track);
    record_if_tracked(track, [a, b, result]() mutable {
        auto dout = result.grad();
        if (a.requires_grad()) {
            auto da = a.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
        }
        if (b.requires_grad()) {
            auto db = b.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) db[i] -= dout[i];
        }
    });
    return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    const bool track = tracked(a) || tracked(b);
    Tensor result = make_result(a.shape(), std::move(out), track);
    record_if_tracked(track, [a, b, result]() mutable {
        auto dout = result.grad();
        if (a.requires_grad()) {
            auto da = a.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * b.values()[i];
        }
        if (b.requires_grad()) {
            auto db = b.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i] * a.values()[i];
        }
    });
    return result;
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * factor;
    const bool track = tracked(x);
    Tensor result = make_result(x.shape(), std::move(out), track);
    record_if_tracked(track, [x, result, factor]() mutable {
        auto dx = x.grad();
        auto dout = result.grad();
        for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += dout[i] * factor;
    });
    return result;
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
    require_rank2(x, "add_rowwise");
    if (bias.rank() != 1 || bias.size() != x.cols()) {
        throw DimensionError("add_rowwise: bias shape " + shape_str(bias.shape()) +
                             " does not match row width of " + shape_str(x.shape()));
    }
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.values()[i * c + j] + bias.values()[j];
    const bool track = tracked(x) || tracked(bias);
    Tensor result = make_result({r, c}, std::move(out), track);
    record_if_tracked(track, [x, bias, result, r, c]() mutable {
        auto dout = result.grad();
        if (x.requires_grad()) {
            auto dx = x.grad();
            for (std::size_t i = 0; i < dout.size(); ++i) dx[i] += dout[i];
        }
        if (bias.requires_grad()) {
            auto db = bias.grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) db[j] += dout[i * c + j];
        }
    });
    return result;
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
    const bool track = tracked(x);
    Tensor result = make_result(x.shape(), std::move(out), track);
    record_if_tracked(track, [x, result]() mutable {
        auto dx = x.grad();
        auto dout = result.grad();
        for (std::size_t i = 0; i < dout.size(); ++i)
            if (x.values()[i] > 0.0) dx[i] += dout[i];
    });
    return result;
}

Tensor gelu(const Tensor& x) {
    static const double kC = std::sqrt(2.0 / std::acos(-1.0));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.values()[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + 0.044715 * v * v * v)));
    }
    const bool track = tracked(x);
    Tensor result = make_result(x.shape(), std::move(out), track);
    record_if_tracked(track, [x, result]() mutable {
        auto dx = x.grad();
        auto dout = result.grad();
        for (std::size_t i = 0; i < dout.size(); ++i) {
            const double v = x.values()[i];
            const double u = kC * (v + 0.044715 * v * v * v);
            const double t = std::tanh(u);
            const double du = kC * (1.0 + 3.0 * 0.044715 * v * v);
            const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
            dx[i] += dout[i] * d;
        }
    });
    return result;
}

Tensor sum(const Tensor& x) {
    double total = std::accumulate(x.values().begin(), x.values().end(), 0.0);
    const bool track = tracked(x);
    Tensor result = Tensor::from({}, {total}, track);
    record_if_tracked(track, [x, result]() mutable {
        auto dx = x.grad();
        const double d = result.grad()[0];
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d;
    });
    return result;
}

namespace {

// Softmax over contiguous stretches: the tensor is viewed as `groups` rows of
// `width` entries with stride `stride` between consecutive entries of a group.
void softmax_strided(const double* in, double* out, std::size_t groups, std::size_t width,
                     std::size_t group_stride, std::size_t stride) {
    for (std::size_t g = 0; g < groups; ++g) {
        const double* src = in + g * group_stride;
        double* dst = out + g * group_stride;
        double mx = src[0];
        for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, src[j * stride]);
        double denom = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double e = std::exp(src[j * stride] - mx);
            dst[j * stride] = e;
            denom += e;
        }
        for (std::size_t j = 0; j < width; ++j) dst[j * stride] /= denom;
    }
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
    const std::size_t r = x.rank();
    if (r == 0 || r > 2) {
        throw DimensionError("softmax: expected rank-1 or rank-2 tensor, got shape " +
                             shape_str(x.shape()));
    }
    int ax = axis < 0 ? static_cast<int>(r) + axis : axis;
    if (ax < 0 || ax >= static_cast<int>(r)) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(x.shape()));
    }
    std::size_t groups, width, group_stride, stride;
    if (r == 1) {
        groups = 1;
        width = x.size();
        group_stride = 0;
        stride = 1;
    } else if (ax == 1) {
        groups = x.dim(0);
        width = x.dim(1);
        group_stride = width;
        stride = 1;
    } else {
        groups = x.dim(1);
        width = x.dim(0);
        group_stride = 1;
        stride = x.dim(1);
    }
    std::vector<double> out(x.size());
    softmax_strided(x.values().data(), out.data(), groups, width, group_stride, stride);
    const bool track = tracked(x);
    Tensor result = make_result(x.shape(), std::move(out), track);
    record_if_tracked(track, [x, result, groups, width, group_stride, stride]() mutable {
        auto dx = x.grad();
        const double* y = result.values().data();
        const double* dy = result.grad().data();
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t base = g * group_stride;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                const std::size_t idx = base + j * stride;
                dot += dy[idx] * y[idx];
            }
            for (std::size_t j = 0; j < width; ++j) {
                const std::size_t idx = base + j * stride;
                dx[idx] += y[idx] * (dy[idx] - dot);
            }
        }
    });
    return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_rank2(x, "layer_norm");
    const std::size_t r = x.rows(), c = x.cols();
    if (gain.rank() != 1 || gain.size() != c || bias.rank() != 1 || bias.size() != c) {
        throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                             shape_str(bias.shape()) + " do not match row width of " +
                             shape_str(x.shape()));
    }
    std::vector<double> out(r * c);
    std::vector<double> xhat(r * c);
    std::vector<double> inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = x.values().data() + i * c;
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std[i] = istd;
        for (std::size_t j = 0; j < c; ++j) {
            const double h = (row[j] - mean) * istd;
            xhat[i * c + j] = h;
            out[i * c + j] = gain.values()[j] * h + bias.values()[j];
        }
    }
    const bool track = tracked(x) || tracked(gain) || tracked(bias);
    Tensor result = make_result({r, c}, std::move(out), track);
    record_if_tracked(track, [x, gain, bias, result, r, c, xhat = std::move(xhat),
                              inv_std = std::move(inv_std)]() mutable {
        const double* dy = result.grad().data();
        if (gain.requires_grad()) {
            auto dg = gain.grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) dg[j] += dy[i * c + j] * xhat[i * c + j];
        }
        if (bias.requires_grad()) {
            auto db = bias.grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) db[j] += dy[i * c + j];
        }
        if (x.requires_grad()) {
            auto dx = x.grad();
            const double cn = static_cast<double>(c);
            for (std::size_t i = 0; i < r; ++i) {
                double sum_dh = 0.0, sum_dh_h = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double dh = dy[i * c + j] * gain.values()[j];
                    sum_dh += dh;
                    sum_dh_h += dh * xhat[i * c + j];
                }
                for (std::size_t j = 0; j < c; ++j) {
                    const double dh = dy[i * c + j] * gain.values()[j];
                    dx[i * c + j] += inv_std[i] *
                                     (dh - sum_dh / cn - xhat[i * c + j] * sum_dh_h / cn);
                }
            }
        }
    });
    return result;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<TokenId>& ids) {
    require_rank2(table, "embedding_lookup");
    const std::size_t vocab = table.rows(), d = table.cols();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const TokenId id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            throw IndexError("embedding_lookup: token id " + std::to_string(id) +
                             " out of range for vocabulary of " + std::to_string(vocab));
        }
        std::copy_n(table.values().data() + static_cast<std::size_t>(id) * d, d,
                    out.data() + i * d);
    }
    const bool track = tracked(table);
    Tensor result = make_result({ids.size(), d}, std::move(out), track);
    record_if_tracked(track, [table, result, ids, d]() mutable {
        auto dt = table.grad();
        const double* dy = result.grad().data();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double* drow = dt.data() + static_cast<std::size_t>(ids[i]) * d;
            for (std::size_t j = 0; j < d; ++j) drow[j] += dy[i * d + j];
        }
    });
    return result;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<TokenId>& targets, TokenId pad_id,
                     double label_smoothing) {
    require_rank2(logits, "cross_entropy");
    const std::size_t rows = logits.rows(), vocab = logits.cols();
    if (targets.size() != rows) {
        throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                             " targets for logits of shape " + shape_str(logits.shape()));
    }
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw ConfigError("cross_entropy: label_smoothing must lie in [0, 1), got " +
                          std::to_string(label_smoothing));
    }
    // Row probabilities are needed for the backward rule; keep them around.
    std::vector<double> probs(rows * vocab);
    std::vector<std::size_t> active;
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const TokenId t = targets[i];
        if (t == pad_id) continue;
        if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
            throw IndexError("cross_entropy: target id " + std::to_string(t) +
                             " out of range for vocabulary of " + std::to_string(vocab));
        }
        active.push_back(i);
        const double* row = logits.values().data() + i * vocab;
        double mx = row[0];
        for (std::size_t j = 1; j < vocab; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) denom += std::exp(row[j] - mx);
        const double lse = mx + std::log(denom);
        double* prow = probs.data() + i * vocab;
        for (std::size_t j = 0; j < vocab; ++j) prow[j] = std::exp(row[j] - lse);
        // loss = sum_j q_j * (lse - logit_j) with q the smoothed target.
        double loss = (1.0 - label_smoothing) * (lse - row[static_cast<std::size_t>(t)]);
        if (label_smoothing > 0.0) {
            double mean_logit = 0.0;
            for (std::size_t j = 0; j < vocab; ++j) mean_logit += row[j];
            mean_logit /= static_cast<double>(vocab);
            loss += label_smoothing * (lse - mean_logit);
        }
        total += loss;
    }
    const double n = static_cast<double>(active.size());
    const double mean = active.empty() ? 0.0 : total / n;
    const bool track = tracked(logits);
    Tensor result = Tensor::from({}, {mean}, track);
    record_if_tracked(track, [logits, result, targets, vocab, label_smoothing,
                              probs = std::move(probs), active = std::move(active), n]() mutable {
        if (active.empty()) return;
        auto dl = logits.grad();
        const double d = result.grad()[0] / n;
        const double uniform = label_smoothing / static_cast<double>(vocab);
        for (std::size_t i : active) {
            const double* prow = probs.data() + i * vocab;
            double* drow = dl.data() + i * vocab;
            for (std::size_t j = 0; j < vocab; ++j) drow[j] += d * (prow[j] - uniform);
            drow[static_cast<std::size_t>(targets[i])] -= d * (1.0 - label_smoothing);
        }
    });
    return result;
}

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor normal_init(Shape shape, double stddev, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor slice_rows(const Tensor& x, std::size_t row_begin, std::size_t row_end) {
    require_rank2(x, "slice_rows");
    const std::size_t r = x.rows(), c = x.cols();
    if (row_begin > row_end || row_end > r) {
        throw IndexError("slice_rows: range [" + std::to_string(row_begin) + ", " +
                         std::to_string(row_end) + ") invalid for shape " + shape_str(x.shape()));
    }
    const std::size_t h = row_end - row_begin;
    std::vector<double> out(h * c);
    std::copy_n(x.values().data() + row_begin * c, h * c, out.data());
    const bool track = tracked(x);
    Tensor result = make_result({h, c}, std::move(out), track);
    record_if_tracked(track, [x, result, row_begin, h, c]() mutable {
        auto dx = x.grad();
        const double* dy = result.grad().data();
        for (std::size_t i = 0; i < h * c; ++i) dx[row_begin * c + i] += dy[i];
    });
    return result;
}

Tensor slice_cols(const Tensor& x, std::size_t col_begin, std::size_t col_end) {
    require_rank2(x, "slice_cols");
    const std::size_t r = x.rows(), c = x.cols();
    if (col_begin > col_end || col_end > c) {
        throw IndexError("slice_cols: range [" + std::to_string(col_begin) + ", " +
                         std::to_string(col_end) + ") invalid for shape " + shape_str(x.shape()));
    }
    const std::size_t w = col_end - col_begin;
    std::vector<double> out(r * w);
    for (std::size_t i = 0; i < r; ++i)
        std::copy_n(x.values().data() + i * c + col_begin, w, out.data() + i * w);
    const bool track = tracked(x);
    Tensor result = make_result({r, w}, std::move(out), track);
    record_if_tracked(track, [x, result, col_begin, r, c, w]() mutable {
        auto dx = x.grad();
        const double* dy = result.grad().data();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) dx[i * c + col_begin + j] += dy[i * w + j];
    });
    return result;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_rank2(a, "concat_rows");
    require_rank2(b, "concat_rows");
    if (a.cols() != b.cols()) {
        throw DimensionError("concat_rows: column widths disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const std::size_t c = a.cols();
    std::vector<double> out(a.size() + b.size());
    std::copy_n(a.values().data(), a.size(), out.data());
    std::copy_n(b.values().data(), b.size(), out.data() + a.size());
    const bool track = tracked(a) || tracked(b);
    Tensor result = make_result({a.rows() + b.rows(), c}, std::move(out), track);
    record_if_tracked(track, [a, b, result]() mutable {
        const double* dy = result.grad().data();
        if (a.requires_grad()) {
            auto da = a.grad();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
        }
        if (b.requires_grad()) {
            auto db = b.grad();
            const double* tail = dy + a.size();
            for (std::size_t i = 0; i < db.size(); ++i) db[i] += tail[i];
        }
    });
    return result;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no tensors given");
    const std::size_t r = parts.front().rows();
    std::size_t total = 0;
    bool track = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.rows() != r) {
            throw DimensionError("concat_cols: row counts disagree, " +
                                 shape_str(parts.front().shape()) + " vs " + shape_str(p.shape()));
        }
        total += p.cols();
        track = track || tracked(p);
    }
    std::vector<double> out(r * total);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(p.values().data() + i * w, w, out.data() + i * total + offset);
        offset += w;
    }
    Tensor result = make_result({r, total}, std::move(out), track);
    record_if_tracked(track, [parts, result, r, total]() mutable {
        const double* dy = result.grad().data();
        std::size_t offset = 0;
        for (const Tensor& p : parts) {
            const std::size_t w = p.cols();
            if (p.requires_grad()) {
                auto dp = p.grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < w; ++j) dp[i * w + j] += dy[i * total + offset + j];
            }
            offset += w;
        }
    });
    return result;
}

Tensor causal_mask_fill(const Tensor& scores) {
    require_rank2(scores, "causal_mask_fill");
    const std::size_t r = scores.rows(), c = scores.cols();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out[i * c + j] = j > i ? kMaskValue : scores.values()[i * c + j];
    const bool track = tracked(scores);
    Tensor result = make_result({r, c}, std::move(out), track);
    record_if_tracked(track, [scores, result, r, c]() mutable {
        auto dx = scores.grad();
        const double* dy = result.grad().data();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c && j <= i; ++j) dx[i * c + j] += dy[i * c + j];
    });
    return result;
}

}  // namespace fnetsum
