#pragma once

#include "gmt/graph.hpp"
#include "gmt/nn.hpp"
#include "gmt/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace gmt {

/// Symmetric-normalized adjacency with self-loops, stored as scatter triples
/// (src, dst, weight) covering both edge directions plus the diagonal. The
/// dense n x n matrix is never materialized.
struct NormAdj {
  int n = 0;
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<double> w;
  bool identity = false;  // post-pooling mode: aggregation is a no-op
};

NormAdj normalize_adjacency(int n, const std::vector<Edge>& edges);
NormAdj identity_adjacency(int n);

/// out[dst] += w * in[src], differentiable. Sequential, fixed scatter order.
Tensor gcn_aggregate(const Tensor& h, const NormAdj& adj);

struct GcnLayer {
  Parameter weight;  // c_in x c_out
  Parameter bias;    // 1 x c_out

  GcnLayer() = default;
  GcnLayer(Eigen::Index c_in, Eigen::Index c_out, std::mt19937_64& rng,
           const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

/// H' = act(A_hat (H W) + b); act is ReLU unless apply_relu is false.
Tensor gcn_forward(GcnLayer& layer, const Tensor& h, const NormAdj& adj,
                   bool apply_relu = true);

enum class JkMode { Concat, Last };

/// Stack of GCN layers with jumping-knowledge aggregation. With Concat, all
/// layer outputs are concatenated feature-wise and linearly projected to d.
struct Encoder {
  std::vector<GcnLayer> layers;
  JkMode jk_mode = JkMode::Concat;
  Parameter jk_proj;  // (L*d) x d, Concat mode only
  double dropout_rate = 0.0;

  Encoder() = default;
  Encoder(Eigen::Index c_in, Eigen::Index d, int num_layers, JkMode jk,
          std::mt19937_64& rng, const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

Tensor encode(Encoder& enc, const Tensor& x, const NormAdj& adj,
              std::mt19937_64& rng, bool training = false);

}  // namespace gmt
