#include "gmt/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace gmt {

namespace {

Tensor scaled_logits(const Tensor& q, const Tensor& k, bool scale_logits) {
  Tensor logits = matmul(q, transpose(k));
  if (scale_logits)
    logits = scale(logits, 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return logits;
}

Tensor apply_attn_dropout(const Tensor& w, DropoutCtx* dctx) {
  if (!dctx || !dctx->rng) return w;
  return dropout(w, dctx->rate, *dctx->rng, dctx->training);
}

}  // namespace

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 bool scale_logits_flag, int softmax_axis, DropoutCtx* dctx) {
  if (q.cols() != k.cols())
    throw std::invalid_argument("attention: query/key width mismatch");
  if (k.rows() != v.rows())
    throw std::invalid_argument("attention: key/value row count mismatch");
  if (k.rows() == 0) throw std::invalid_argument("attention: empty key set");
  Tensor w = softmax(scaled_logits(q, k, scale_logits_flag), softmax_axis);
  return matmul(apply_attn_dropout(w, dctx), v);
}

MultiHeadParams::MultiHeadParams(Eigen::Index d, int h, std::mt19937_64& rng,
                                 const std::string& name)
    : heads(h), wo(xavier(h * d, d, rng), name + ".wo") {
  if (h < 1) throw std::invalid_argument("MultiHeadParams: heads must be >= 1");
  for (int i = 0; i < h; ++i) {
    std::string hn = name + ".h" + std::to_string(i);
    wq.emplace_back(xavier(d, d, rng), hn + ".wq");
    wk.emplace_back(xavier(d, d, rng), hn + ".wk");
    wv.emplace_back(xavier(d, d, rng), hn + ".wv");
  }
}

void MultiHeadParams::collect(std::vector<Parameter*>& out) {
  for (auto& p : wq) out.push_back(&p);
  for (auto& p : wk) out.push_back(&p);
  for (auto& p : wv) out.push_back(&p);
  out.push_back(&wo);
}

GraphMultiHeadParams::GraphMultiHeadParams(Eigen::Index d, int h,
                                           std::mt19937_64& rng,
                                           const std::string& name)
    : heads(h), wo(xavier(h * d, d, rng), name + ".wo") {
  if (h < 1) throw std::invalid_argument("GraphMultiHeadParams: heads must be >= 1");
  for (int i = 0; i < h; ++i) {
    std::string hn = name + ".h" + std::to_string(i);
    wq.emplace_back(xavier(d, d, rng), hn + ".wq");
    key_gnn.emplace_back(d, d, rng, hn + ".key_gnn");
    value_gnn.emplace_back(d, d, rng, hn + ".value_gnn");
  }
}

void GraphMultiHeadParams::collect(std::vector<Parameter*>& out) {
  for (auto& p : wq) out.push_back(&p);
  for (auto& l : key_gnn) l.collect(out);
  for (auto& l : value_gnn) l.collect(out);
  out.push_back(&wo);
}

AttnResult multi_head_full(const Tensor& q, const Tensor& k, const Tensor& v,
                           MultiHeadParams& p, DropoutCtx* dctx) {
  std::vector<Tensor> outs, logits;
  for (int i = 0; i < p.heads; ++i) {
    Tensor qp = matmul(q, p.wq[static_cast<std::size_t>(i)].tensor);
    Tensor kp = matmul(k, p.wk[static_cast<std::size_t>(i)].tensor);
    Tensor vp = matmul(v, p.wv[static_cast<std::size_t>(i)].tensor);
    Tensor lg = scaled_logits(qp, kp, p.scale_logits);
    Tensor w = apply_attn_dropout(softmax(lg, 1), dctx);
    outs.push_back(matmul(w, vp));
    logits.push_back(lg);
  }
  Tensor mean_logits = logits[0];
  for (int i = 1; i < p.heads; ++i) mean_logits = add(mean_logits, logits[static_cast<std::size_t>(i)]);
  mean_logits = scale(mean_logits, 1.0 / p.heads);
  return {matmul(concat_cols(outs), p.wo.tensor), mean_logits};
}

Tensor multi_head(const Tensor& q, const Tensor& k, const Tensor& v,
                  MultiHeadParams& p, DropoutCtx* dctx) {
  return multi_head_full(q, k, v, p, dctx).out;
}

AttnResult graph_multi_head_full(const Tensor& q, const Tensor& h,
                                 const NormAdj& adj, GraphMultiHeadParams& p,
                                 DropoutCtx* dctx) {
  if (h.rows() == 0)
    throw std::invalid_argument("graph_multi_head: empty node set");
  std::vector<Tensor> outs, logits;
  for (int i = 0; i < p.heads; ++i) {
    Tensor qp = matmul(q, p.wq[static_cast<std::size_t>(i)].tensor);
    Tensor kp = gcn_forward(p.key_gnn[static_cast<std::size_t>(i)], h, adj);
    Tensor vp = gcn_forward(p.value_gnn[static_cast<std::size_t>(i)], h, adj);
    Tensor lg = scaled_logits(qp, kp, p.scale_logits);
    Tensor w = apply_attn_dropout(softmax(lg, 1), dctx);
    outs.push_back(matmul(w, vp));
    logits.push_back(lg);
  }
  Tensor mean_logits = logits[0];
  for (int i = 1; i < p.heads; ++i) mean_logits = add(mean_logits, logits[static_cast<std::size_t>(i)]);
  mean_logits = scale(mean_logits, 1.0 / p.heads);
  return {matmul(concat_cols(outs), p.wo.tensor), mean_logits};
}

Tensor graph_multi_head(const Tensor& q, const Tensor& h, const NormAdj& adj,
                        GraphMultiHeadParams& p, DropoutCtx* dctx) {
  return graph_multi_head_full(q, h, adj, p, dctx).out;
}

AssignmentMatrix extract_assignment(const Tensor& mean_logits, AssignAxis axis) {
  // logits are k x n; C is n x k
  Tensor w = softmax(mean_logits, axis == AssignAxis::Query ? 0 : 1);
  return {transpose(w), axis};
}

void export_assignment_csv(const Matrix& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_assignment_csv: cannot open " + path);
  out << "node_id";
  for (Eigen::Index j = 0; j < c.cols(); ++j) out << ",cluster_" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < c.cols(); ++j) out << "," << c(i, j);
    out << "\n";
  }
}

GmPoolBlock::GmPoolBlock(Eigen::Index d, int k, int heads, KvMode kv,
                         std::mt19937_64& rng, const std::string& name)
    : seed(randn(k, d, 1.0 / std::sqrt(static_cast<double>(d)), rng),
           name + ".seed"),
      kv_mode(kv),
      ln1(d, name + ".ln1"),
      ln2(d, name + ".ln2"),
      ff(d, rng, name + ".ff") {
  if (k < 1) throw std::invalid_argument("GmPoolBlock: k must be >= 1");
  if (kv == KvMode::Gnn)
    gmh = GraphMultiHeadParams(d, heads, rng, name + ".gmh");
  else
    mh = MultiHeadParams(d, heads, rng, name + ".mh");
}

void GmPoolBlock::collect(std::vector<Parameter*>& out) {
  out.push_back(&seed);
  if (kv_mode == KvMode::Gnn)
    gmh.collect(out);
  else
    mh.collect(out);
  ln1.collect(out);
  ln2.collect(out);
  ff.collect(out);
}

GmPoolResult gmpool(GmPoolBlock& block, const Tensor& h, const NormAdj& adj,
                    DropoutCtx* dctx, AssignAxis assign_axis) {
  if (h.rows() == 0) throw std::invalid_argument("gmpool: empty graph");
  AttnResult att = block.kv_mode == KvMode::Gnn
                       ? graph_multi_head_full(block.seed.tensor, h, adj,
                                               block.gmh, dctx)
                       : multi_head_full(block.seed.tensor, h, h, block.mh, dctx);
  Tensor z = apply_layer_norm(add(block.seed.tensor, att.out), block.ln1);
  Tensor out = apply_layer_norm(add(z, rff(z, block.ff)), block.ln2);
  return {out, extract_assignment(att.mean_logits, assign_axis)};
}

SelfAttBlock::SelfAttBlock(Eigen::Index d, int heads, std::mt19937_64& rng,
                           const std::string& name)
    : mh(d, heads, rng, name + ".mh"),
      ln1(d, name + ".ln1"),
      ln2(d, name + ".ln2"),
      ff(d, rng, name + ".ff") {}

void SelfAttBlock::collect(std::vector<Parameter*>& out) {
  mh.collect(out);
  ln1.collect(out);
  ln2.collect(out);
  ff.collect(out);
}

Tensor self_att(SelfAttBlock& block, const Tensor& h, DropoutCtx* dctx) {
  Tensor z = apply_layer_norm(add(h, multi_head(h, h, h, block.mh, dctx)), block.ln1);
  return apply_layer_norm(add(z, rff(z, block.ff)), block.ln2);
}

GmtPooler::GmtPooler(Eigen::Index d, int k, int heads, std::mt19937_64& rng,
                     const std::string& name)
    : pool_k(d, k, heads, KvMode::Gnn, rng, name + ".pool_k"),
      selfatt(d, heads, rng, name + ".selfatt"),
      pool_1(d, 1, heads, KvMode::Linear, rng, name + ".pool_1") {}

void GmtPooler::collect(std::vector<Parameter*>& out) {
  pool_k.collect(out);
  selfatt.collect(out);
  pool_1.collect(out);
}

Tensor gmt_readout(GmtPooler& pooler, const Tensor& h, const NormAdj& adj,
                   DropoutCtx* dctx) {
  if (h.rows() == 0) throw std::invalid_argument("gmt_readout: empty graph");
  Tensor zk = gmpool(pooler.pool_k, h, adj, dctx).pooled;
  Tensor zs = self_att(pooler.selfatt, zk, dctx);
  NormAdj ident = identity_adjacency(pooler.pool_k.k());
  return gmpool(pooler.pool_1, zs, ident, dctx).pooled;
}

BatchAdj build_batch_adj(const GraphBatch& batch) {
  BatchAdj out;
  out.block = normalize_adjacency(batch.total_nodes(), batch.edges);
  std::vector<std::vector<Edge>> per(batch.node_counts.size());
  for (const auto& [u, v] : batch.edges) {
    int g = batch.graph_id[static_cast<std::size_t>(u)];
    int off = batch.offsets[static_cast<std::size_t>(g)];
    per[static_cast<std::size_t>(g)].push_back({u - off, v - off});
  }
  for (int g = 0; g < batch.num_graphs(); ++g)
    out.per_graph.push_back(normalize_adjacency(
        batch.node_counts[static_cast<std::size_t>(g)],
        per[static_cast<std::size_t>(g)]));
  return out;
}

Tensor gmt_readout_batch(GmtPooler& pooler, const Tensor& h_block,
                         const GraphBatch& batch, const BatchAdj& adj,
                         DropoutCtx* dctx) {
  std::vector<Tensor> rows;
  for (int g = 0; g < batch.num_graphs(); ++g) {
    Tensor hg = row_slice(h_block, batch.offsets[static_cast<std::size_t>(g)],
                          batch.node_counts[static_cast<std::size_t>(g)]);
    rows.push_back(gmt_readout(pooler, hg,
                               adj.per_graph[static_cast<std::size_t>(g)], dctx));
  }
  return concat_rows(rows);
}

Tensor sum_pool(const Tensor& h_block, const GraphBatch& batch) {
  std::vector<Tensor> rows;
  for (int g = 0; g < batch.num_graphs(); ++g)
    rows.push_back(sum_rows(row_slice(h_block,
                                      batch.offsets[static_cast<std::size_t>(g)],
                                      batch.node_counts[static_cast<std::size_t>(g)])));
  return concat_rows(rows);
}

Tensor mean_pool(const Tensor& h_block, const GraphBatch& batch) {
  std::vector<Tensor> rows;
  for (int g = 0; g < batch.num_graphs(); ++g)
    rows.push_back(mean_rows(row_slice(h_block,
                                       batch.offsets[static_cast<std::size_t>(g)],
                                       batch.node_counts[static_cast<std::size_t>(g)])));
  return concat_rows(rows);
}

TopkResult topk_pool(const Tensor& h, const std::vector<Edge>& edges,
                     Parameter& score, double ratio) {
  if (ratio <= 0.0 || ratio > 1.0)
    throw std::invalid_argument("topk_pool: ratio must be in (0, 1]");
  Tensor y = div_scalar(matmul(h, score.tensor), l2_norm(score.tensor));
  int n = static_cast<int>(h.rows());
  int keep = static_cast<int>(std::ceil(ratio * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Matrix& yv = y.value();
  std::stable_sort(order.begin(), order.end(), [&yv](int a, int b) {
    if (yv(a, 0) != yv(b, 0)) return yv(a, 0) > yv(b, 0);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(keep));

  TopkResult res;
  res.kept = order;
  res.h_kept = mul_colvec(select_rows(h, order), tanh_t(select_rows(y, order)));
  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < keep; ++j)
    new_index[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = j;
  for (const auto& [u, v] : edges) {
    int nu = new_index[static_cast<std::size_t>(u)];
    int nv = new_index[static_cast<std::size_t>(v)];
    if (nu >= 0 && nv >= 0) res.edges_kept.push_back({nu, nv});
  }
  return res;
}

Matrix dense_adjacency(int n, const std::vector<Edge>& edges) {
  Matrix a = Matrix::Zero(n, n);
  for (const auto& [u, v] : edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

ClusterResult cluster_pool(const Tensor& h, const std::vector<Edge>& edges,
                           GcnLayer& assign, const NormAdj& adj,
                           bool with_coarsen) {
  Tensor logits = gcn_forward(assign, h, adj, /*apply_relu=*/false);
  ClusterResult res;
  res.c = softmax(logits, 1);
  res.h_pool = matmul(transpose(res.c), h);
  if (with_coarsen) {
    // dense n x n adjacency on purpose: this is the quadratic-space baseline
    Tensor a_dense(dense_adjacency(static_cast<int>(h.rows()), edges));
    res.a_pool = matmul(transpose(res.c), matmul(a_dense, res.c));
  }
  return res;
}

Matrix coarsen_adjacency(const Matrix& c, const std::vector<Edge>& edges) {
  Matrix out = Matrix::Zero(c.cols(), c.cols());
  for (const auto& [u, v] : edges) {
    out += c.row(u).transpose() * c.row(v);
    out += c.row(v).transpose() * c.row(u);
  }
  return out;
}

}  // namespace gmt
