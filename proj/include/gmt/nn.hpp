#pragma once

#include "gmt/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace gmt {

/// Trainable tensor with Adam moment estimates.
struct Parameter {
  Tensor tensor;
  std::string name;
  Matrix m;  // first moment
  Matrix v;  // second moment
  long step = 0;

  Parameter() = default;
  Parameter(Matrix value, std::string n)
      : tensor(std::move(value), /*requires_grad=*/true), name(std::move(n)) {
    m = Matrix::Zero(tensor.rows(), tensor.cols());
    v = Matrix::Zero(tensor.rows(), tensor.cols());
  }
};

Matrix randn(Eigen::Index rows, Eigen::Index cols, double stddev,
             std::mt19937_64& rng);
/// Normal init with std 1/sqrt(fan_in).
Matrix xavier(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // loss-coupled L2
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void zero_grad(const std::vector<Parameter*>& params) const;
  /// One Adam update over all parameters. Gradients must have been populated
  /// (zero_grad + backward) first.
  void step(const std::vector<Parameter*>& params) const;

  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
};

/// Affine part of a layer normalization.
struct LayerNormParams {
  Parameter gamma;  // 1 x d, init 1
  Parameter beta;   // 1 x d, init 0

  LayerNormParams() = default;
  LayerNormParams(Eigen::Index d, const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

Tensor apply_layer_norm(const Tensor& x, LayerNormParams& ln, double eps = 1e-5);

/// Row-wise two-layer perceptron d -> d -> d with ReLU in between; the same
/// map is applied to every row.
struct RffParams {
  Parameter w1, b1, w2, b2;

  RffParams() = default;
  RffParams(Eigen::Index d, std::mt19937_64& rng, const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

Tensor rff(const Tensor& x, RffParams& p);

}  // namespace gmt
