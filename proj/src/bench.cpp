#include "gmt/bench.hpp"

#include "gmt/gcn.hpp"
#include "gmt/graph.hpp"
#include "gmt/pooling.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmt {

namespace {

struct BenchModel {
  std::string method;
  GcnLayer embed;  // c_in -> d
  GmtPooler pooler;
  Parameter topk_score;
  GcnLayer cluster_assign;
  double ratio = 0.0;  // topk: keeps ceil(ratio * n) = k nodes
  int k = 1;
};

BenchModel make_model(const std::string& method, int c_in, int d, int k,
                      int heads, double ratio, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BenchModel m;
  m.method = method;
  m.k = k;
  m.ratio = ratio;
  m.embed = GcnLayer(c_in, d, rng, "embed");
  if (method == "gmt") {
    m.pooler = GmtPooler(d, k, heads, rng, "pooler");
  } else if (method == "topk") {
    m.topk_score = Parameter(xavier(d, 1, rng), "topk.score");
  } else if (method == "cluster") {
    m.cluster_assign = GcnLayer(d, k, rng, "cluster.assign");
  } else if (method != "sum" && method != "mean") {
    throw std::invalid_argument("bench: unknown method '" + method + "'");
  }
  return m;
}

// One full READOUT over a single graph; the quantity whose footprint and
// latency the benchmarks measure.
Tensor forward_single(BenchModel& m, const Tensor& x, const Graph& g,
                      const NormAdj& adj) {
  Tensor h = gcn_forward(m.embed, x, adj);
  if (m.method == "gmt") return gmt_readout(m.pooler, h, adj);
  if (m.method == "sum") return sum_rows(h);
  if (m.method == "mean") return mean_rows(h);
  if (m.method == "topk") {
    auto res = topk_pool(h, g.edges, m.topk_score, m.ratio);
    return mean_rows(res.h_kept);
  }
  // cluster: the coarsened adjacency C^T A C goes through the dense n x n A
  auto res = cluster_pool(h, g.edges, m.cluster_assign, adj, /*with_coarsen=*/true);
  return mean_rows(matmul(res.a_pool, res.h_pool));
}

Tensor forward_batch(BenchModel& m, const Tensor& x_block,
                     const std::vector<Graph>& graphs, const GraphBatch& batch,
                     const BatchAdj& adj) {
  Tensor h = gcn_forward(m.embed, x_block, adj.block);
  if (m.method == "gmt") return gmt_readout_batch(m.pooler, h, batch, adj);
  if (m.method == "sum") return sum_pool(h, batch);
  if (m.method == "mean") return mean_pool(h, batch);
  std::vector<Tensor> rows;
  for (int g = 0; g < batch.num_graphs(); ++g) {
    int off = batch.offsets[static_cast<std::size_t>(g)];
    int n = batch.node_counts[static_cast<std::size_t>(g)];
    Tensor hg = row_slice(h, off, n);
    const Graph& graph = graphs[static_cast<std::size_t>(g)];
    if (m.method == "topk") {
      auto res = topk_pool(hg, graph.edges, m.topk_score, m.ratio);
      rows.push_back(mean_rows(res.h_kept));
    } else {
      auto res = cluster_pool(hg, graph.edges, m.cluster_assign,
                              adj.per_graph[static_cast<std::size_t>(g)],
                              /*with_coarsen=*/true);
      rows.push_back(mean_rows(matmul(res.a_pool, res.h_pool)));
    }
  }
  return concat_rows(rows);
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<std::string> parse_method_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw std::invalid_argument("bench: empty method list");
  return out;
}

std::vector<BenchRecord> bench_memory(const RunConfig& cfg) {
  auto methods = parse_method_list(cfg.methods);
  std::vector<BenchRecord> records;
  NoGradGuard ng;
  for (int n : cfg.sweep) {
    long m_edges = 2L * n;
    Graph g = gen_erdos_renyi(n, m_edges, cfg.seed + static_cast<std::uint64_t>(n));
    NormAdj adj = normalize_adjacency(g.n, g.edges);
    for (const auto& method : methods) {
      BenchModel model =
          make_model(method, static_cast<int>(g.node_features.cols()), cfg.hidden,
                     cfg.bench_k, cfg.heads,
                     static_cast<double>(cfg.bench_k) / n, cfg.seed);
      Tensor x(g.node_features);
      AllocStats::reset_peak();
      double t0 = now_ms();
      Tensor out = forward_single(model, x, g, adj);
      double t1 = now_ms();
      records.push_back({n, m_edges, method, AllocStats::peak(), t1 - t0});
      (void)out;
    }
  }
  return records;
}

std::vector<BenchRecord> bench_time(const RunConfig& cfg) {
  auto methods = parse_method_list(cfg.methods);
  std::vector<BenchRecord> records;
  NoGradGuard ng;
  for (int n : cfg.sweep) {
    long m_edges = std::max(1L, static_cast<long>(n) * n / 10);
    std::vector<Graph> graphs;
    graphs.reserve(static_cast<std::size_t>(cfg.bench_batch));
    for (int i = 0; i < cfg.bench_batch; ++i)
      graphs.push_back(gen_erdos_renyi(
          n, m_edges, cfg.seed + static_cast<std::uint64_t>(n) * 1000 +
                          static_cast<std::uint64_t>(i)));
    GraphBatch batch = make_batch(graphs);
    BatchAdj adj = build_batch_adj(batch);
    for (const auto& method : methods) {
      BenchModel model =
          make_model(method, static_cast<int>(batch.node_features.cols()),
                     cfg.hidden, cfg.bench_k, cfg.heads,
                     static_cast<double>(cfg.bench_k) / n, cfg.seed);
      Tensor x(batch.node_features);
      AllocStats::reset_peak();
      forward_batch(model, x, graphs, batch, adj);  // warmup
      std::int64_t peak = AllocStats::peak();
      std::vector<double> times;
      for (int rep = 0; rep < 5; ++rep) {
        double t0 = now_ms();
        Tensor out = forward_batch(model, x, graphs, batch, adj);
        times.push_back(now_ms() - t0);
        (void)out;
      }
      std::sort(times.begin(), times.end());
      records.push_back({n, m_edges, method, peak, times[2]});
    }
  }
  return records;
}

void write_bench_csv(const std::vector<BenchRecord>& records,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.precision(12);
  out << "n,m,method,peak_scalars,wall_ms\n";
  for (const auto& r : records)
    out << r.n << "," << r.m << "," << r.method << "," << r.peak_scalars << ","
        << r.wall_ms << "\n";
}

}  // namespace gmt
