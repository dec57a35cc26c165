#include "gmt/models.hpp"

#include <cmath>
#include <stdexcept>

namespace gmt {

PoolMethod parse_pool_method(const std::string& s) {
  if (s == "gmt") return PoolMethod::Gmt;
  if (s == "sum") return PoolMethod::Sum;
  if (s == "mean") return PoolMethod::Mean;
  if (s == "topk") return PoolMethod::Topk;
  if (s == "cluster") return PoolMethod::Cluster;
  throw std::invalid_argument("unknown pooling method '" + s + "'");
}

std::string pool_method_name(PoolMethod m) {
  switch (m) {
    case PoolMethod::Gmt: return "gmt";
    case PoolMethod::Sum: return "sum";
    case PoolMethod::Mean: return "mean";
    case PoolMethod::Topk: return "topk";
    case PoolMethod::Cluster: return "cluster";
  }
  return "?";
}

ClassifierModel::ClassifierModel(int c_in, int d, int num_classes, int k,
                                 int heads, PoolMethod method, double ratio,
                                 double dropout, std::mt19937_64& rng)
    : encoder(c_in, d, 3, JkMode::Concat, rng, "encoder"),
      method(method),
      head_w(xavier(d, num_classes, rng), "head.w"),
      head_b(Matrix::Zero(1, num_classes), "head.b"),
      ratio(ratio),
      k(k) {
  encoder.dropout_rate = dropout;
  switch (method) {
    case PoolMethod::Gmt:
      pooler = GmtPooler(d, k, heads, rng, "pooler");
      break;
    case PoolMethod::Topk:
      topk_score = Parameter(xavier(d, 1, rng), "topk.score");
      break;
    case PoolMethod::Cluster:
      cluster_assign = GcnLayer(d, k, rng, "cluster.assign");
      break;
    default:
      break;
  }
}

std::vector<Parameter*> ClassifierModel::parameters() {
  std::vector<Parameter*> out;
  encoder.collect(out);
  switch (method) {
    case PoolMethod::Gmt: pooler.collect(out); break;
    case PoolMethod::Topk: out.push_back(&topk_score); break;
    case PoolMethod::Cluster: cluster_assign.collect(out); break;
    default: break;
  }
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

Tensor ClassifierModel::forward(const GraphBatch& batch, const BatchAdj& adj,
                                std::mt19937_64& rng, bool training) {
  Tensor x(batch.node_features);
  Tensor h = encode(encoder, x, adj.block, rng, training);
  Tensor pooled;
  switch (method) {
    case PoolMethod::Gmt: {
      DropoutCtx dctx{encoder.dropout_rate, &rng, training};
      pooled = gmt_readout_batch(pooler, h, batch, adj, &dctx);
      break;
    }
    case PoolMethod::Sum:
      pooled = sum_pool(h, batch);
      break;
    case PoolMethod::Mean:
      pooled = mean_pool(h, batch);
      break;
    case PoolMethod::Topk: {
      std::vector<Tensor> rows;
      for (int g = 0; g < batch.num_graphs(); ++g) {
        int off = batch.offsets[static_cast<std::size_t>(g)];
        int n = batch.node_counts[static_cast<std::size_t>(g)];
        std::vector<Edge> local;
        for (const auto& [u, v] : batch.edges)
          if (batch.graph_id[static_cast<std::size_t>(u)] == g)
            local.push_back({u - off, v - off});
        auto res = topk_pool(row_slice(h, off, n), local, topk_score, ratio);
        rows.push_back(mean_rows(res.h_kept));
      }
      pooled = concat_rows(rows);
      break;
    }
    case PoolMethod::Cluster: {
      std::vector<Tensor> rows;
      for (int g = 0; g < batch.num_graphs(); ++g) {
        int off = batch.offsets[static_cast<std::size_t>(g)];
        int n = batch.node_counts[static_cast<std::size_t>(g)];
        auto res = cluster_pool(row_slice(h, off, n), {}, cluster_assign,
                                adj.per_graph[static_cast<std::size_t>(g)],
                                /*with_coarsen=*/false);
        rows.push_back(mean_rows(res.h_pool));
      }
      pooled = concat_rows(rows);
      break;
    }
  }
  return add_rowvec(matmul(pooled, head_w.tensor), head_b.tensor);
}

ReconPool parse_recon_pool(const std::string& s) {
  if (s == "gmpool" || s == "gmt") return ReconPool::Gmpool;
  if (s == "topk") return ReconPool::Topk;
  if (s == "cluster") return ReconPool::Cluster;
  throw std::invalid_argument("unknown reconstruction pooling '" + s + "'");
}

ReconModel::ReconModel(int c_in, int d, int n, double ratio, ReconPool method,
                       std::mt19937_64& rng)
    : mp1(c_in, d, rng, "mp1"),
      mp2(d, d, rng, "mp2"),
      method(method),
      mp3(d, d, rng, "mp3"),
      mp4(d, d, rng, "mp4"),
      head_w(xavier(d, c_in, rng), "head.w"),
      head_b(Matrix::Zero(1, c_in), "head.b"),
      ratio(ratio) {
  k = std::max(1, static_cast<int>(std::ceil(ratio * n)));
  switch (method) {
    case ReconPool::Gmpool:
      // single soft assignment matrix, one attention head
      pool = GmPoolBlock(d, k, 1, KvMode::Gnn, rng, "pool");
      break;
    case ReconPool::Topk:
      topk_score = Parameter(xavier(d, 1, rng), "topk.score");
      break;
    case ReconPool::Cluster:
      cluster_assign = GcnLayer(d, k, rng, "cluster.assign");
      break;
  }
}

std::vector<Parameter*> ReconModel::parameters() {
  std::vector<Parameter*> out;
  mp1.collect(out);
  mp2.collect(out);
  switch (method) {
    case ReconPool::Gmpool: pool.collect(out); break;
    case ReconPool::Topk: out.push_back(&topk_score); break;
    case ReconPool::Cluster: cluster_assign.collect(out); break;
  }
  mp3.collect(out);
  mp4.collect(out);
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

ReconModel::ForwardResult ReconModel::forward(const Graph& g, const NormAdj& adj) {
  Tensor x(g.node_features);
  Tensor h = gcn_forward(mp2, gcn_forward(mp1, x, adj), adj);
  Tensor unpooled;
  ForwardResult res;
  switch (method) {
    case ReconPool::Gmpool: {
      auto p = gmpool(pool, h, adj);
      res.c = p.assignment.c;
      res.has_assignment = true;
      unpooled = matmul(res.c, p.pooled);
      break;
    }
    case ReconPool::Topk: {
      auto p = topk_pool(h, g.edges, topk_score, ratio);
      unpooled = scatter_rows(p.h_kept, p.kept, g.n);
      break;
    }
    case ReconPool::Cluster: {
      auto p = cluster_pool(h, g.edges, cluster_assign, adj,
                            /*with_coarsen=*/false);
      res.c = p.c;
      res.has_assignment = true;
      unpooled = matmul(res.c, p.h_pool);
      break;
    }
  }
  Tensor h2 = gcn_forward(mp4, gcn_forward(mp3, unpooled, adj), adj);
  res.x_rec = add_rowvec(matmul(h2, head_w.tensor), head_b.tensor);
  return res;
}

std::vector<Matrix> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (auto* p : params) out.push_back(p->tensor.value());
  return out;
}

void restore(const std::vector<Parameter*>& params,
             const std::vector<Matrix>& values) {
  if (params.size() != values.size())
    throw std::invalid_argument("restore: checkpoint size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i]->tensor.set_value(values[i]);
}

}  // namespace gmt
