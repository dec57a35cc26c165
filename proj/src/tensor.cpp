#include "gmt/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gmt {

namespace {
std::atomic<std::int64_t> g_current{0};
std::atomic<std::int64_t> g_peak{0};
thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and "
     << b.rows() << "x" << b.cols();
  throw std::invalid_argument(os.str());
}
}  // namespace

std::int64_t AllocStats::current() { return g_current; }
std::int64_t AllocStats::peak() { return g_peak; }
void AllocStats::reset_peak() { g_peak.store(g_current.load()); }
void AllocStats::add(std::int64_t n) {
  std::int64_t cur = g_current.fetch_add(n) + n;
  std::int64_t prev = g_peak.load();
  while (cur > prev && !g_peak.compare_exchange_weak(prev, cur)) {
  }
}
void AllocStats::sub(std::int64_t n) { g_current -= n; }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

namespace detail {

struct TensorNode {
  Matrix value;
  std::unique_ptr<Matrix> grad;
  bool requires_grad = false;
  bool needs_grad = false;
  std::vector<Tensor> parents;
  BackwardFn backward_fn;

  explicit TensorNode(Matrix v) : value(std::move(v)) {
    AllocStats::add(value.size());
  }
  ~TensorNode() {
    AllocStats::sub(value.size() + (grad ? grad->size() : 0));
  }
  void ensure_grad() {
    if (!grad) {
      grad = std::make_unique<Matrix>(Matrix::Zero(value.rows(), value.cols()));
      AllocStats::add(grad->size());
    }
  }
  void drop_grad() {
    if (grad) {
      AllocStats::sub(grad->size());
      grad.reset();
    }
  }
};

}  // namespace detail

Tensor::Tensor(Matrix value, bool requires_grad)
    : node_(std::make_shared<detail::TensorNode>(std::move(value))) {
  node_->requires_grad = requires_grad;
  node_->needs_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Tensor(std::move(m), requires_grad);
}

Eigen::Index Tensor::rows() const { return node_->value.rows(); }
Eigen::Index Tensor::cols() const { return node_->value.cols(); }
Eigen::Index Tensor::size() const { return node_->value.size(); }
const Matrix& Tensor::value() const { return node_->value; }
bool Tensor::has_grad() const { return node_ && node_->grad != nullptr; }
const Matrix& Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("Tensor::grad: gradient not populated");
  return *node_->grad;
}
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::needs_grad() const { return node_ && node_->needs_grad; }

void Tensor::zero_grad() {
  node_->ensure_grad();
  node_->grad->setZero();
}
void Tensor::clear_grad() { node_->drop_grad(); }

void Tensor::set_value(const Matrix& v) {
  if (v.rows() != rows() || v.cols() != cols())
    throw std::invalid_argument("Tensor::set_value: shape mismatch");
  node_->value = v;
}

void accumulate(const Tensor& t, const Matrix& g) {
  if (!t.needs_grad()) return;
  auto node = t.node();
  node->ensure_grad();
  *node->grad += g;
}

Tensor custom_op(Matrix value, std::vector<Tensor> parents, BackwardFn backward) {
  Tensor out(std::move(value));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& p : parents)
    if (p.needs_grad()) any = true;
  if (!any) return out;
  auto node = out.node();
  node->needs_grad = true;
  node->parents = std::move(parents);
  node->backward_fn = std::move(backward);
  return out;
}

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  return custom_op(a.value() * b.value(), {a, b},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g * ps[1].value().transpose());
                     accumulate(ps[1], ps[0].value().transpose() * g);
                   });
}

Tensor transpose(const Tensor& x) {
  return custom_op(x.value().transpose(), {x},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g.transpose());
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  return custom_op(a.value() + b.value(), {a, b},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g);
                     accumulate(ps[1], g);
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a, b);
  return custom_op(a.value() - b.value(), {a, b},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g);
                     accumulate(ps[1], -g);
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  return custom_op(a.value().cwiseProduct(b.value()), {a, b},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g.cwiseProduct(ps[1].value()));
                     accumulate(ps[1], g.cwiseProduct(ps[0].value()));
                   });
}

Tensor scale(const Tensor& x, double c) {
  return custom_op(x.value() * c, {x},
                   [c](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g * c);
                   });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) shape_error("add_rowvec", x, b);
  Matrix v = x.value();
  v.rowwise() += b.value().row(0);
  return custom_op(std::move(v), {x, b},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g);
                     accumulate(ps[1], g.colwise().sum());
                   });
}

Tensor mul_colvec(const Tensor& x, const Tensor& s) {
  if (s.cols() != 1 || s.rows() != x.rows()) shape_error("mul_colvec", x, s);
  Matrix v = x.value().array().colwise() * s.value().col(0).array();
  return custom_op(std::move(v), {x, s},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g.array().colwise() *
                                           ps[1].value().col(0).array());
                     accumulate(ps[1], g.cwiseProduct(ps[0].value())
                                           .rowwise()
                                           .sum());
                   });
}

Tensor div_scalar(const Tensor& x, const Tensor& s) {
  if (s.rows() != 1 || s.cols() != 1)
    throw std::invalid_argument("div_scalar: divisor must be 1x1");
  double d = s.value()(0, 0);
  return custom_op(x.value() / d, {x, s},
                   [d](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g / d);
                     Matrix gs(1, 1);
                     gs(0, 0) = -g.cwiseProduct(ps[0].value()).sum() / (d * d);
                     accumulate(ps[1], gs);
                   });
}

Tensor l2_norm(const Tensor& x) {
  double n = x.value().norm();
  Matrix v(1, 1);
  v(0, 0) = n;
  return custom_op(std::move(v), {x},
                   [n](const Matrix& g, const std::vector<Tensor>& ps) {
                     if (n > 0) accumulate(ps[0], (g(0, 0) / n) * ps[0].value());
                   });
}

Tensor relu(const Tensor& x) {
  return custom_op(x.value().cwiseMax(0.0), {x},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(
                         ps[0],
                         (ps[0].value().array() > 0.0).cast<double>().matrix()
                             .cwiseProduct(g));
                   });
}

Tensor tanh_t(const Tensor& x) {
  Matrix y = x.value().array().tanh();
  return custom_op(std::move(y), {x},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     Matrix y = ps[0].value().array().tanh();
                     accumulate(ps[0],
                                g.cwiseProduct((1.0 - y.array().square()).matrix()));
                   });
}

Tensor softmax(const Tensor& x, int axis) {
  if (axis != 0 && axis != 1)
    throw std::invalid_argument("softmax: axis out of bounds for rank-2 tensor");
  Matrix y;
  if (axis == 1) {
    Matrix shifted = x.value().array().colwise() -
                     x.value().rowwise().maxCoeff().array();
    y = shifted.array().exp();
    y.array().colwise() /= y.rowwise().sum().array();
  } else {
    Matrix shifted = x.value().array().rowwise() -
                     x.value().colwise().maxCoeff().array();
    y = shifted.array().exp();
    y.array().rowwise() /= y.colwise().sum().array();
  }
  return custom_op(std::move(y), {x},
                   [axis](const Matrix& g, const std::vector<Tensor>& ps) {
                     // recompute y; gx = y .* (g - <g, y> along axis)
                     Matrix y;
                     const Matrix& xv = ps[0].value();
                     if (axis == 1) {
                       Matrix shifted = xv.array().colwise() -
                                        xv.rowwise().maxCoeff().array();
                       y = shifted.array().exp();
                       y.array().colwise() /= y.rowwise().sum().array();
                       Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
                       Matrix gx = y.cwiseProduct(
                           (g.array().colwise() - dot.array()).matrix());
                       accumulate(ps[0], gx);
                     } else {
                       Matrix shifted = xv.array().rowwise() -
                                        xv.colwise().maxCoeff().array();
                       y = shifted.array().exp();
                       y.array().rowwise() /= y.colwise().sum().array();
                       Eigen::RowVectorXd dot = g.cwiseProduct(y).colwise().sum();
                       Matrix gx = y.cwiseProduct(
                           (g.array().rowwise() - dot.array()).matrix());
                       accumulate(ps[0], gx);
                     }
                   });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
      beta.cols() != x.cols())
    throw std::invalid_argument("layer_norm: affine parameter length mismatch");
  const Matrix& xv = x.value();
  Eigen::VectorXd mu = xv.rowwise().mean();
  Matrix centered = xv.array().colwise() - mu.array();
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd istd = (var.array() + eps).rsqrt();
  Matrix xhat = centered.array().colwise() * istd.array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.array().rowwise() += beta.value().row(0).array();
  return custom_op(
      std::move(out), {x, gamma, beta},
      [eps](const Matrix& g, const std::vector<Tensor>& ps) {
        const Matrix& xv = ps[0].value();
        double d = static_cast<double>(xv.cols());
        Eigen::VectorXd mu = xv.rowwise().mean();
        Matrix centered = xv.array().colwise() - mu.array();
        Eigen::VectorXd var = centered.array().square().rowwise().mean();
        Eigen::VectorXd istd = (var.array() + eps).rsqrt();
        Matrix xhat = centered.array().colwise() * istd.array();

        accumulate(ps[1], g.cwiseProduct(xhat).colwise().sum());
        accumulate(ps[2], g.colwise().sum());

        Matrix dxhat = g.array().rowwise() * ps[1].value().row(0).array();
        Eigen::VectorXd m1 = dxhat.rowwise().sum() / d;
        Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / d;
        Matrix dx = dxhat;
        dx.array().colwise() -= m1.array();
        dx.array() -= xhat.array().colwise() * m2.array();
        dx.array().colwise() *= istd.array();
        accumulate(ps[0], dx);
      });
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty input");
  Eigen::Index rows = xs[0].rows(), cols = 0;
  for (const auto& x : xs) {
    if (x.rows() != rows) shape_error("concat_cols", xs[0], x);
    cols += x.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& x : xs) {
    v.middleCols(off, x.cols()) = x.value();
    off += x.cols();
  }
  return custom_op(std::move(v), xs,
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     Eigen::Index off = 0;
                     for (const auto& p : ps) {
                       accumulate(p, g.middleCols(off, p.cols()));
                       off += p.cols();
                     }
                   });
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
  Eigen::Index cols = xs[0].cols(), rows = 0;
  for (const auto& x : xs) {
    if (x.cols() != cols) shape_error("concat_rows", xs[0], x);
    rows += x.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& x : xs) {
    v.middleRows(off, x.rows()) = x.value();
    off += x.rows();
  }
  return custom_op(std::move(v), xs,
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     Eigen::Index off = 0;
                     for (const auto& p : ps) {
                       accumulate(p, g.middleRows(off, p.rows()));
                       off += p.rows();
                     }
                   });
}

Tensor row_slice(const Tensor& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.rows())
    throw std::invalid_argument("row_slice: range out of bounds");
  return custom_op(x.value().middleRows(begin, count), {x},
                   [begin, count](const Matrix& g, const std::vector<Tensor>& ps) {
                     Matrix gx = Matrix::Zero(ps[0].rows(), ps[0].cols());
                     gx.middleRows(begin, count) = g;
                     accumulate(ps[0], gx);
                   });
}

Tensor select_rows(const Tensor& x, const std::vector<int>& idx) {
  Matrix v(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= x.rows())
      throw std::invalid_argument("select_rows: index out of bounds");
    v.row(static_cast<Eigen::Index>(j)) = x.value().row(idx[j]);
  }
  return custom_op(std::move(v), {x},
                   [idx](const Matrix& g, const std::vector<Tensor>& ps) {
                     Matrix gx = Matrix::Zero(ps[0].rows(), ps[0].cols());
                     for (std::size_t j = 0; j < idx.size(); ++j)
                       gx.row(idx[j]) += g.row(static_cast<Eigen::Index>(j));
                     accumulate(ps[0], gx);
                   });
}

Tensor scatter_rows(const Tensor& x, const std::vector<int>& idx,
                    Eigen::Index n_out) {
  if (static_cast<Eigen::Index>(idx.size()) != x.rows())
    throw std::invalid_argument("scatter_rows: index count mismatch");
  Matrix v = Matrix::Zero(n_out, x.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= n_out)
      throw std::invalid_argument("scatter_rows: index out of bounds");
    v.row(idx[j]) = x.value().row(static_cast<Eigen::Index>(j));
  }
  return custom_op(std::move(v), {x},
                   [idx](const Matrix& g, const std::vector<Tensor>& ps) {
                     Matrix gx(ps[0].rows(), ps[0].cols());
                     for (std::size_t j = 0; j < idx.size(); ++j)
                       gx.row(static_cast<Eigen::Index>(j)) = g.row(idx[j]);
                     accumulate(ps[0], gx);
                   });
}

Tensor sum_all(const Tensor& x) {
  Matrix v(1, 1);
  v(0, 0) = x.value().sum();
  return custom_op(std::move(v), {x},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], Matrix::Constant(ps[0].rows(), ps[0].cols(),
                                                        g(0, 0)));
                   });
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor sum_rows(const Tensor& x) {
  return custom_op(x.value().colwise().sum(), {x},
                   [](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g.row(0).replicate(ps[0].rows(), 1));
                   });
}

Tensor mean_rows(const Tensor& x) {
  return scale(sum_rows(x), 1.0 / static_cast<double>(x.rows()));
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool training) {
  if (!training || rate == 0.0) return x;
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  double inv = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = keep(rng) ? inv : 0.0;
  return custom_op(x.value().cwiseProduct(mask), {x},
                   [mask](const Matrix& g, const std::vector<Tensor>& ps) {
                     accumulate(ps[0], g.cwiseProduct(mask));
                   });
}

Tensor mse_loss(const Tensor& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("mse_loss: shape mismatch");
  Matrix diff = pred.value() - target;
  Matrix v(1, 1);
  v(0, 0) = diff.array().square().mean();
  return custom_op(std::move(v), {pred},
                   [target](const Matrix& g, const std::vector<Tensor>& ps) {
                     double n = static_cast<double>(ps[0].size());
                     accumulate(ps[0],
                                (2.0 * g(0, 0) / n) * (ps[0].value() - target));
                   });
}

Tensor cross_entropy_with_logits(const Tensor& logits,
                                 const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw std::invalid_argument("cross_entropy_with_logits: label count mismatch");
  const Matrix& z = logits.value();
  Eigen::VectorXd mx = z.rowwise().maxCoeff();
  Matrix shifted = z.array().colwise() - mx.array();
  Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    loss += lse(i) - shifted(i, labels[static_cast<std::size_t>(i)]);
  loss /= static_cast<double>(z.rows());
  Matrix v(1, 1);
  v(0, 0) = loss;
  return custom_op(std::move(v), {logits},
                   [labels](const Matrix& g, const std::vector<Tensor>& ps) {
                     const Matrix& z = ps[0].value();
                     Eigen::VectorXd mx = z.rowwise().maxCoeff();
                     Matrix p = (z.array().colwise() - mx.array()).exp();
                     p.array().colwise() /= p.rowwise().sum().array();
                     for (Eigen::Index i = 0; i < z.rows(); ++i)
                       p(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
                     accumulate(ps[0],
                                (g(0, 0) / static_cast<double>(z.rows())) * p);
                   });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");
  if (!loss.needs_grad())
    throw std::logic_error(
        "backward: loss has no recorded graph (gradients disabled or no "
        "trainable inputs)");

  // iterative post-order DFS for a reverse topological order
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  struct Frame {
    detail::TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::TensorNode* p = f.node->parents[f.next_parent++].node().get();
      if (p->needs_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  (*loss.node()->grad)(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->backward_fn && n->grad) n->backward_fn(*n->grad, n->parents);
  }
}

}  // namespace gmt
