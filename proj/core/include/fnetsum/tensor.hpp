#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fnetsum/common.hpp"

namespace fnetsum {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Dense row-major double tensor. Cheap to copy: copies share the same
/// underlying buffer (handle semantics), which is what lets parameters be
/// referenced both by the model and by recorded tape operations.
///
/// A rank-0 tensor (empty shape) is a scalar with one element.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor ones(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::size_t rank() const;
    std::size_t dim(std::size_t axis) const;
    /// Rows/cols of a rank-2 tensor.
    std::size_t rows() const;
    std::size_t cols() const;

    bool requires_grad() const;

    double item() const;  // scalar tensors only
    double at(std::size_t i) const;
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i);
    double& at(std::size_t i, std::size_t j);

    // Tensor is a handle: const applies to the handle, not the storage,
    // mirroring shared_ptr semantics. Backward closures rely on this.
    std::span<double> values() const;
    std::span<double> grad() const;

    void zero_grad();

    /// Deep copy of the values; the copy never requires grad.
    Tensor detached_copy() const;

    /// Identity of the underlying buffer (two handles to the same storage
    /// compare equal).
    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  private:
    struct Node {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;  // allocated iff requires_grad
        bool requires_grad = false;
    };

    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    Node& node() const;

    std::shared_ptr<Node> node_;
};

/// Wengert-list tape for reverse-mode autodiff. Constructing a Tape makes it
/// the active tape for the current thread; differentiable ops append their
/// backward rules to it in execution order. backward() replays the rules in
/// reverse and then drops them.
class Tape {
  public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::function<void()> backward_rule);
    std::size_t op_count() const { return entries_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and replays all recorded rules in reverse.
    /// The tape is empty afterwards.
    void backward(const Tensor& loss);

  private:
    std::vector<std::function<void()>> entries_;
    Tape* previous_ = nullptr;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Each op validates shapes, computes the forward
// value, and (when a tape is active and an input requires grad) records a
// backward rule that accumulates into the inputs' grad buffers.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, double factor);
/// x: [rows x d], bias: [d]; adds bias to every row.
Tensor add_rowwise(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sum(const Tensor& x);  // -> scalar
/// Numerically stable softmax along `axis` (negative axis counts from the
/// back). Rows of the result sum to 1.
Tensor softmax(const Tensor& x, int axis = -1);
/// Normalizes the last axis to zero mean / unit variance, then applies
/// gain * x + bias. gain and bias have the last-axis width.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// table: [vocab x d]; returns [ids.size() x d].
Tensor embedding_lookup(const Tensor& table, const std::vector<TokenId>& ids);
/// Mean negative log-likelihood of `targets` under row-softmax of `logits`,
/// skipping rows whose target equals pad_id. label_smoothing in [0,1) mixes
/// the one-hot target with the uniform distribution.
Tensor cross_entropy(const Tensor& logits, const std::vector<TokenId>& targets, TokenId pad_id,
                     double label_smoothing = 0.0);

/// Fresh parameter tensors (requires_grad = true).
Tensor uniform_init(Shape shape, double bound, Rng& rng);
Tensor normal_init(Shape shape, double stddev, Rng& rng);

Tensor slice_rows(const Tensor& x, std::size_t row_begin, std::size_t row_end);
Tensor slice_cols(const Tensor& x, std::size_t col_begin, std::size_t col_end);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Replaces entries above the main diagonal with a large negative constant,
/// so a following row-softmax assigns them exactly zero weight.
Tensor causal_mask_fill(const Tensor& scores);

}  // namespace fnetsum
