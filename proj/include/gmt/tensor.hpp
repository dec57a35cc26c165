#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace gmt {

using Matrix = Eigen::MatrixXd;

/// Counts live 64-bit scalars held by tensor payloads (values + gradients).
/// The memory benchmark reads the peak attained during a forward pass.
struct AllocStats {
  static std::int64_t current();
  static std::int64_t peak();
  static void reset_peak();
  static void add(std::int64_t n);
  static void sub(std::int64_t n);
};

namespace detail {
struct TensorNode;
}

/// Dense matrix with an optional gradient record. Copies share the underlying
/// node; values are immutable after creation except gradient accumulation
/// during backward and in-place optimizer updates on leaf tensors.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  Eigen::Index rows() const;
  Eigen::Index cols() const;
  Eigen::Index size() const;

  const Matrix& value() const;
  bool has_grad() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  bool needs_grad() const;

  /// Clears the gradient to an allocated zero matrix.
  void zero_grad();
  /// Drops the gradient record entirely.
  void clear_grad();
  /// In-place value update for leaf tensors (optimizer step); not recorded.
  void set_value(const Matrix& v);

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// When false, operations do not record parents and backward is unavailable.
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

using BackwardFn =
    std::function<void(const Matrix& upstream, const std::vector<Tensor>& parents)>;

/// Builds an op node from a computed value, its parents, and the rule that
/// pushes the upstream gradient into them. Parents are only retained while
/// gradients are enabled and at least one parent participates in backward.
Tensor custom_op(Matrix value, std::vector<Tensor> parents, BackwardFn backward);

/// Accumulates `g` into the gradient of `t` (allocating a zero gradient on
/// first use). No-op for tensors that do not participate in backward.
void accumulate(const Tensor& t, const Matrix& g);

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, double c);
/// x + b with b a 1 x d row vector broadcast over the rows of x.
Tensor add_rowvec(const Tensor& x, const Tensor& b);
/// Row i of x scaled by s(i); s is an n x 1 column vector.
Tensor mul_colvec(const Tensor& x, const Tensor& s);
/// x / s with s a 1 x 1 tensor.
Tensor div_scalar(const Tensor& x, const Tensor& s);
Tensor l2_norm(const Tensor& x);  // Frobenius norm, 1 x 1

Tensor relu(const Tensor& x);
Tensor tanh_t(const Tensor& x);

/// axis = 1: every row sums to 1; axis = 0: every column sums to 1.
/// Stabilized by subtracting the slice maximum before exponentiation.
Tensor softmax(const Tensor& x, int axis);

/// Row-wise normalization to zero mean / unit variance (epsilon-stabilized),
/// followed by the affine map gamma, beta (both 1 x d).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor concat_rows(const std::vector<Tensor>& xs);
Tensor row_slice(const Tensor& x, Eigen::Index begin, Eigen::Index count);
Tensor select_rows(const Tensor& x, const std::vector<int>& idx);
/// Inverse of select_rows: places row j of x at row idx[j] of an n_out-row
/// zero matrix.
Tensor scatter_rows(const Tensor& x, const std::vector<int>& idx,
                    Eigen::Index n_out);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor mean_rows(const Tensor& x);  // 1 x d mean over rows
Tensor sum_rows(const Tensor& x);   // 1 x d sum over rows

/// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool training);

Tensor mse_loss(const Tensor& pred, const Matrix& target);
Tensor cross_entropy_with_logits(const Tensor& logits, const std::vector<int>& labels);

/// Reverse-mode sweep from a scalar loss. Visits each producing operation
/// exactly once, in reverse topological order.
void backward(const Tensor& loss);

}  // namespace gmt
