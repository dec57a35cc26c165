#include "gmt/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gmt {

Matrix randn(Eigen::Index rows, Eigen::Index cols, double stddev,
             std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix xavier(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
  return randn(fan_in, fan_out, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

void Adam::zero_grad(const std::vector<Parameter*>& params) const {
  for (auto* p : params) p->tensor.zero_grad();
}

void Adam::step(const std::vector<Parameter*>& params) const {
  bool any = false;
  for (auto* p : params)
    if (p->tensor.has_grad()) any = true;
  if (!any)
    throw std::logic_error("Adam::step called before backward populated gradients");
  for (auto* p : params) {
    if (!p->tensor.has_grad())
      throw std::logic_error("Adam::step: parameter '" + p->name +
                             "' has no gradient");
    Matrix g = p->tensor.grad();
    if (cfg_.weight_decay != 0.0) g += cfg_.weight_decay * p->tensor.value();
    p->step += 1;
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * g;
    p->v = cfg_.beta2 * p->v.array() + (1.0 - cfg_.beta2) * g.array().square();
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(p->step));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(p->step));
    Matrix mhat = p->m / bc1;
    Matrix vhat = p->v / bc2;
    Matrix update =
        cfg_.lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
    p->tensor.set_value(p->tensor.value() - update);
  }
}

LayerNormParams::LayerNormParams(Eigen::Index d, const std::string& name)
    : gamma(Matrix::Ones(1, d), name + ".gamma"),
      beta(Matrix::Zero(1, d), name + ".beta") {}

void LayerNormParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

Tensor apply_layer_norm(const Tensor& x, LayerNormParams& ln, double eps) {
  return layer_norm(x, ln.gamma.tensor, ln.beta.tensor, eps);
}

RffParams::RffParams(Eigen::Index d, std::mt19937_64& rng, const std::string& name)
    : w1(xavier(d, d, rng), name + ".w1"),
      b1(Matrix::Zero(1, d), name + ".b1"),
      w2(xavier(d, d, rng), name + ".w2"),
      b2(Matrix::Zero(1, d), name + ".b2") {}

void RffParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&w1);
  out.push_back(&b1);
  out.push_back(&w2);
  out.push_back(&b2);
}

Tensor rff(const Tensor& x, RffParams& p) {
  if (x.cols() != p.w1.tensor.rows())
    throw std::invalid_argument("rff: input width does not match parameters");
  Tensor h = relu(add_rowvec(matmul(x, p.w1.tensor), p.b1.tensor));
  return add_rowvec(matmul(h, p.w2.tensor), p.b2.tensor);
}

}  // namespace gmt
