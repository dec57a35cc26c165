#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fd_check.hpp"
#include "gmt/gcn.hpp"
#include "gmt/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace gmt;
using testutil::random_matrix;

namespace {

// dense D^{-1/2} (A + I) D^{-1/2}
Matrix dense_norm_adj(int n, const std::vector<Edge>& edges) {
  Matrix a = Matrix::Identity(n, n);
  for (auto [u, v] : edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  Eigen::VectorXd d = a.rowwise().sum();
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = a(i, j) / std::sqrt(d(i) * d(j));
  return out;
}

Matrix scatter_as_dense(const NormAdj& adj) {
  Matrix a = Matrix::Zero(adj.n, adj.n);
  for (std::size_t e = 0; e < adj.w.size(); ++e)
    a(adj.dst[e], adj.src[e]) += adj.w[e];
  return a;
}

}  // namespace

TEST_CASE("normalized adjacency matches the dense formula") {
  Graph g = gen_erdos_renyi(12, 20, 3);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Matrix dense = dense_norm_adj(g.n, g.edges);
  CHECK((scatter_as_dense(adj) - dense).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("aggregation equals a dense matrix product") {
  std::mt19937_64 rng(4);
  Graph g = gen_erdos_renyi(10, 15, 9);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Matrix h = random_matrix(10, 6, rng);
  Matrix expect = dense_norm_adj(g.n, g.edges) * h;
  Matrix got = gcn_aggregate(Tensor(h), adj).value();
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identity adjacency makes aggregation a no-op") {
  std::mt19937_64 rng(5);
  Matrix h = random_matrix(7, 4, rng);
  NormAdj id = identity_adjacency(7);
  CHECK((gcn_aggregate(Tensor(h), id).value() - h).norm() == 0.0);
}

TEST_CASE("gcn layer output matches relu(A_hat H W + b)") {
  std::mt19937_64 rng(6);
  Graph g = gen_ring(9);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  GcnLayer layer(2, 5, rng, "l");
  Matrix expect =
      ((dense_norm_adj(g.n, g.edges) * (g.node_features * layer.weight.tensor.value()))
           .rowwise() +
       layer.bias.tensor.value().row(0))
          .cwiseMax(0.0);
  Matrix got = gcn_forward(layer, Tensor(g.node_features), adj).value();
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn layer is permutation equivariant") {
  std::mt19937_64 rng(7);
  Graph g = gen_erdos_renyi(15, 30, 11);
  Matrix x = random_matrix(15, 3, rng);
  GcnLayer layer(3, 4, rng, "l");

  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Matrix y = gcn_forward(layer, Tensor(x), adj).value();

  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(15, 3);
  for (int i = 0; i < 15; ++i) xp.row(perm[i]) = x.row(i);
  std::vector<Edge> ep;
  for (auto [u, v] : g.edges) ep.push_back({perm[u], perm[v]});
  NormAdj adjp = normalize_adjacency(15, ep);
  Matrix yp = gcn_forward(layer, Tensor(xp), adjp).value();
  for (int i = 0; i < 15; ++i)
    CHECK((yp.row(perm[i]) - y.row(i)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn gradients pass finite differences") {
  std::mt19937_64 rng(8);
  Graph g = gen_erdos_renyi(8, 12, 13);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  for (int inst = 0; inst < 5; ++inst) {
    GcnLayer layer(3, 4, rng, "l");
    Parameter x(random_matrix(8, 3, rng), "x");
    std::vector<Parameter*> ps{&x};
    layer.collect(ps);
    Matrix proj = random_matrix(8, 4, rng);
    auto fwd = [&]() {
      // tanh instead of relu keeps the check away from the kink
      Tensor pre = gcn_forward(layer, x.tensor, adj, /*apply_relu=*/false);
      return sum_all(mul(tanh_t(pre), Tensor(proj)));
    };
    CHECK(testutil::fd_check_params(fwd, ps) < 1e-4);
  }
}

TEST_CASE("encoder concatenates all layer outputs and projects to d") {
  std::mt19937_64 rng(9);
  Graph g = gen_ring(10);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Encoder enc(2, 6, 3, JkMode::Concat, rng, "enc");
  std::mt19937_64 drng(1);
  Tensor h = encode(enc, Tensor(g.node_features), adj, drng, false);
  CHECK(h.rows() == 10);
  CHECK(h.cols() == 6);
  CHECK(enc.jk_proj.tensor.rows() == 18);
  CHECK(enc.jk_proj.tensor.cols() == 6);

  Encoder enc2(2, 6, 3, JkMode::Last, rng, "enc2");
  Tensor h2 = encode(enc2, Tensor(g.node_features), adj, drng, false);
  CHECK(h2.rows() == 10);
  CHECK(h2.cols() == 6);
}

TEST_CASE("encoder dropout only acts in training mode") {
  std::mt19937_64 rng(10);
  Graph g = gen_ring(6);
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Encoder enc(2, 4, 3, JkMode::Concat, rng, "enc");
  enc.dropout_rate = 0.5;
  std::mt19937_64 d1(1), d2(2);
  Matrix e1 = encode(enc, Tensor(g.node_features), adj, d1, false).value();
  Matrix e2 = encode(enc, Tensor(g.node_features), adj, d2, false).value();
  CHECK((e1 - e2).norm() == 0.0);  // eval mode ignores the rng
  std::mt19937_64 d3(1), d4(2);
  Matrix t1 = encode(enc, Tensor(g.node_features), adj, d3, true).value();
  Matrix t2 = encode(enc, Tensor(g.node_features), adj, d4, true).value();
  CHECK((t1 - t2).norm() > 0.0);  // different masks
}
