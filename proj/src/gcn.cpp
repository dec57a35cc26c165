#include "gmt/gcn.hpp"

#include <cmath>
#include <stdexcept>

namespace gmt {

NormAdj normalize_adjacency(int n, const std::vector<Edge>& edges) {
  NormAdj adj;
  adj.n = n;
  std::vector<double> deg(static_cast<std::size_t>(n), 1.0);  // self-loop
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("normalize_adjacency: edge endpoint out of range");
    deg[static_cast<std::size_t>(u)] += 1.0;
    deg[static_cast<std::size_t>(v)] += 1.0;
  }
  std::vector<double> isqrt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    isqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg[static_cast<std::size_t>(i)]);
  auto push = [&](int s, int d) {
    adj.src.push_back(s);
    adj.dst.push_back(d);
    adj.w.push_back(isqrt[static_cast<std::size_t>(s)] *
                    isqrt[static_cast<std::size_t>(d)]);
  };
  for (int i = 0; i < n; ++i) push(i, i);
  for (const auto& [u, v] : edges) {
    push(u, v);
    push(v, u);
  }
  return adj;
}

NormAdj identity_adjacency(int n) {
  NormAdj adj;
  adj.n = n;
  adj.identity = true;
  return adj;
}

Tensor gcn_aggregate(const Tensor& h, const NormAdj& adj) {
  if (adj.identity) return h;
  if (h.rows() != adj.n)
    throw std::invalid_argument("gcn_aggregate: row count does not match graph");
  Matrix out = Matrix::Zero(h.rows(), h.cols());
  for (std::size_t e = 0; e < adj.src.size(); ++e)
    out.row(adj.dst[e]) += adj.w[e] * h.value().row(adj.src[e]);
  return custom_op(std::move(out), {h},
                   [&adj](const Matrix& g, const std::vector<Tensor>& ps) {
                     Matrix gh = Matrix::Zero(ps[0].rows(), ps[0].cols());
                     for (std::size_t e = 0; e < adj.src.size(); ++e)
                       gh.row(adj.src[e]) += adj.w[e] * g.row(adj.dst[e]);
                     accumulate(ps[0], gh);
                   });
}

GcnLayer::GcnLayer(Eigen::Index c_in, Eigen::Index c_out, std::mt19937_64& rng,
                   const std::string& name)
    : weight(xavier(c_in, c_out, rng), name + ".weight"),
      bias(Matrix::Zero(1, c_out), name + ".bias") {}

void GcnLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Tensor gcn_forward(GcnLayer& layer, const Tensor& h, const NormAdj& adj,
                   bool apply_relu) {
  Tensor z = add_rowvec(gcn_aggregate(matmul(h, layer.weight.tensor), adj),
                        layer.bias.tensor);
  return apply_relu ? relu(z) : z;
}

Encoder::Encoder(Eigen::Index c_in, Eigen::Index d, int num_layers, JkMode jk,
                 std::mt19937_64& rng, const std::string& name)
    : jk_mode(jk) {
  if (num_layers < 1) throw std::invalid_argument("Encoder: need >= 1 layer");
  Eigen::Index in = c_in;
  for (int l = 0; l < num_layers; ++l) {
    layers.emplace_back(in, d, rng, name + ".gcn" + std::to_string(l));
    in = d;
  }
  if (jk_mode == JkMode::Concat)
    jk_proj = Parameter(xavier(num_layers * d, d, rng), name + ".jk_proj");
}

void Encoder::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers) l.collect(out);
  if (jk_mode == JkMode::Concat) out.push_back(&jk_proj);
}

Tensor encode(Encoder& enc, const Tensor& x, const NormAdj& adj,
              std::mt19937_64& rng, bool training) {
  std::vector<Tensor> outs;
  Tensor h = x;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    bool last = (l + 1 == enc.layers.size());
    // no nonlinearity after the final layer before pooling
    h = gcn_forward(enc.layers[l], h, adj, /*apply_relu=*/!last);
    if (!last) h = dropout(h, enc.dropout_rate, rng, training);
    outs.push_back(h);
  }
  if (enc.jk_mode == JkMode::Last) return outs.back();
  return matmul(concat_cols(outs), enc.jk_proj.tensor);
}

}  // namespace gmt
