#pragma once

#include "gmt/gcn.hpp"
#include "gmt/graph.hpp"
#include "gmt/nn.hpp"
#include "gmt/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace gmt {

/// Optional dropout applied to attention weights during training.
struct DropoutCtx {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
  bool training = false;
};

/// Scaled dot-product attention. softmax_axis = 1 normalizes each query's
/// weights over the keys (the default); axis = 0 normalizes over queries.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 bool scale_logits = true, int softmax_axis = 1,
                 DropoutCtx* dctx = nullptr);

/// Per-head square projections (d x d), concatenated outputs projected by wo.
struct MultiHeadParams {
  int heads = 1;
  bool scale_logits = true;
  std::vector<Parameter> wq, wk, wv;  // d x d each
  Parameter wo;                       // (h*d) x d

  MultiHeadParams() = default;
  MultiHeadParams(Eigen::Index d, int h, std::mt19937_64& rng,
                  const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

/// Keys and values produced by one GCN layer per head per role, so they
/// carry neighborhood structure. With an identity adjacency the GCN layers
/// reduce to row-wise maps and the block coincides with plain multi-head
/// attention over those projections.
struct GraphMultiHeadParams {
  int heads = 1;
  bool scale_logits = true;
  std::vector<Parameter> wq;               // d x d per head
  std::vector<GcnLayer> key_gnn, value_gnn;  // d -> d per head
  Parameter wo;                            // (h*d) x d

  GraphMultiHeadParams() = default;
  GraphMultiHeadParams(Eigen::Index d, int h, std::mt19937_64& rng,
                       const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

/// Attention output plus the head-averaged scaled logits (n_q x n), from
/// which assignment matrices are extracted.
struct AttnResult {
  Tensor out;
  Tensor mean_logits;
};

AttnResult multi_head_full(const Tensor& q, const Tensor& k, const Tensor& v,
                           MultiHeadParams& p, DropoutCtx* dctx = nullptr);
Tensor multi_head(const Tensor& q, const Tensor& k, const Tensor& v,
                  MultiHeadParams& p, DropoutCtx* dctx = nullptr);

AttnResult graph_multi_head_full(const Tensor& q, const Tensor& h,
                                 const NormAdj& adj, GraphMultiHeadParams& p,
                                 DropoutCtx* dctx = nullptr);
Tensor graph_multi_head(const Tensor& q, const Tensor& h, const NormAdj& adj,
                        GraphMultiHeadParams& p, DropoutCtx* dctx = nullptr);

/// Soft node-to-cluster memberships (n x k) extracted from attention logits.
/// Query-axis normalization makes every node row sum to 1; key-axis keeps the
/// forward attention normalization (columns of C sum to 1 instead).
enum class AssignAxis { Query, Key };

struct AssignmentMatrix {
  Tensor c;  // n x k
  AssignAxis axis = AssignAxis::Query;
};

AssignmentMatrix extract_assignment(const Tensor& mean_logits,
                                    AssignAxis axis = AssignAxis::Query);

void export_assignment_csv(const Matrix& c, const std::string& path);

/// Seeded multiset pooling block: out = LN(Z + rFF(Z)), Z = LN(S + att(S, H)).
/// Keys/values come from per-head GCN layers (kv GNN mode) or linear
/// projections (post-first-pool mode).
enum class KvMode { Gnn, Linear };

struct GmPoolBlock {
  Parameter seed;  // k x d
  KvMode kv_mode = KvMode::Gnn;
  GraphMultiHeadParams gmh;  // Gnn mode
  MultiHeadParams mh;        // Linear mode
  LayerNormParams ln1, ln2;
  RffParams ff;

  GmPoolBlock() = default;
  GmPoolBlock(Eigen::Index d, int k, int heads, KvMode kv, std::mt19937_64& rng,
              const std::string& name);
  int k() const { return static_cast<int>(seed.tensor.rows()); }
  void collect(std::vector<Parameter*>& out);
};

struct GmPoolResult {
  Tensor pooled;  // k x d
  AssignmentMatrix assignment;
};

GmPoolResult gmpool(GmPoolBlock& block, const Tensor& h, const NormAdj& adj,
                    DropoutCtx* dctx = nullptr,
                    AssignAxis assign_axis = AssignAxis::Query);

/// Residual self-attention over the condensed nodes:
/// out = LN(Z + rFF(Z)), Z = LN(H + MH(H, H, H)).
struct SelfAttBlock {
  MultiHeadParams mh;
  LayerNormParams ln1, ln2;
  RffParams ff;

  SelfAttBlock() = default;
  SelfAttBlock(Eigen::Index d, int heads, std::mt19937_64& rng,
               const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

Tensor self_att(SelfAttBlock& block, const Tensor& h, DropoutCtx* dctx = nullptr);

/// The full pooling stack: GMPool_1(SelfAtt(GMPool_k(H, A)), I). The second
/// pooling runs on the identity adjacency, so its keys/values are linear.
struct GmtPooler {
  GmPoolBlock pool_k;
  SelfAttBlock selfatt;
  GmPoolBlock pool_1;

  GmtPooler() = default;
  GmtPooler(Eigen::Index d, int k, int heads, std::mt19937_64& rng,
            const std::string& name);
  void collect(std::vector<Parameter*>& out);
};

/// Single-graph readout: one d-vector (returned as 1 x d).
Tensor gmt_readout(GmtPooler& pooler, const Tensor& h, const NormAdj& adj,
                   DropoutCtx* dctx = nullptr);

/// Per-graph adjacency structures for batched pooling.
struct BatchAdj {
  NormAdj block;
  std::vector<NormAdj> per_graph;
};
BatchAdj build_batch_adj(const GraphBatch& batch);

/// Batched readout: row g is the readout of graph g. Attention never crosses
/// graph boundaries (each graph is pooled over its own block rows).
Tensor gmt_readout_batch(GmtPooler& pooler, const Tensor& h_block,
                         const GraphBatch& batch, const BatchAdj& adj,
                         DropoutCtx* dctx = nullptr);

// ---- baseline READOUTs ------------------------------------------------------

Tensor sum_pool(const Tensor& h_block, const GraphBatch& batch);
Tensor mean_pool(const Tensor& h_block, const GraphBatch& batch);

/// Node-drop pooling: keeps the top ceil(ratio*n) nodes by the learnable
/// score y = H p / ||p||, gates kept features by tanh(y). Ties break toward
/// the lower node index.
struct TopkResult {
  Tensor h_kept;
  std::vector<Edge> edges_kept;  // induced subgraph, reindexed
  std::vector<int> kept;         // original node indices, score-descending
};

TopkResult topk_pool(const Tensor& h, const std::vector<Edge>& edges,
                     Parameter& score, double ratio);

/// Node-clustering pooling: C = row-softmax(GCN_assign(H, A)), pooled
/// features C^T H, and (optionally) the dense coarsened adjacency C^T A C.
/// The coarsening deliberately materializes the dense n x n adjacency.
struct ClusterResult {
  Tensor h_pool;  // k x d
  Tensor a_pool;  // k x k dense, undefined when with_coarsen is false
  Tensor c;       // n x k
};

ClusterResult cluster_pool(const Tensor& h, const std::vector<Edge>& edges,
                           GcnLayer& assign, const NormAdj& adj,
                           bool with_coarsen = true);

Matrix dense_adjacency(int n, const std::vector<Edge>& edges);
/// C^T A C computed edgewise without materializing A.
Matrix coarsen_adjacency(const Matrix& c, const std::vector<Edge>& edges);

}  // namespace gmt
