#pragma once

#include "gmt/gcn.hpp"
#include "gmt/pooling.hpp"

#include <random>
#include <string>
#include <vector>

namespace gmt {

enum class PoolMethod { Gmt, Sum, Mean, Topk, Cluster };

PoolMethod parse_pool_method(const std::string& s);
std::string pool_method_name(PoolMethod m);

/// Encoder + READOUT + linear classification head.
struct ClassifierModel {
  Encoder encoder;
  PoolMethod method = PoolMethod::Gmt;
  GmtPooler pooler;         // Gmt
  Parameter topk_score;     // Topk, d x 1
  GcnLayer cluster_assign;  // Cluster, d -> k
  Parameter head_w, head_b;
  double ratio = 0.25;
  int k = 1;

  ClassifierModel() = default;
  ClassifierModel(int c_in, int d, int num_classes, int k, int heads,
                  PoolMethod method, double ratio, double dropout,
                  std::mt19937_64& rng);

  std::vector<Parameter*> parameters();

  /// Logits, one row per graph in the batch.
  Tensor forward(const GraphBatch& batch, const BatchAdj& adj,
                 std::mt19937_64& rng, bool training);
};

enum class ReconPool { Gmpool, Topk, Cluster };

ReconPool parse_recon_pool(const std::string& s);

/// Autoencoder: 2 message-passing layers, one pooling stage, unpooling via
/// the assignment matrix (index scatter for node drop), 2 message-passing
/// layers, linear head back to the input feature dimension.
struct ReconModel {
  GcnLayer mp1, mp2;
  ReconPool method = ReconPool::Gmpool;
  GmPoolBlock pool;         // Gmpool, h = 1
  Parameter topk_score;     // Topk
  GcnLayer cluster_assign;  // Cluster
  GcnLayer mp3, mp4;
  Parameter head_w, head_b;
  double ratio = 0.25;
  int k = 1;

  struct ForwardResult {
    Tensor x_rec;     // n x c
    Tensor c;         // n x k assignment; undefined for Topk
    bool has_assignment = false;
  };

  ReconModel() = default;
  ReconModel(int c_in, int d, int n, double ratio, ReconPool method,
             std::mt19937_64& rng);

  std::vector<Parameter*> parameters();
  ForwardResult forward(const Graph& g, const NormAdj& adj);
};

/// Snapshot/restore of parameter values (early-stopping checkpoints).
std::vector<Matrix> snapshot(const std::vector<Parameter*>& params);
void restore(const std::vector<Parameter*>& params,
             const std::vector<Matrix>& values);

}  // namespace gmt
