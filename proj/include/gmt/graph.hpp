#pragma once

#include "gmt/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gmt {

using Edge = std::pair<int, int>;

/// Undirected graph. Each edge is stored once; message passing expands to
/// both directions on the fly. No self-loops unless added explicitly.
struct Graph {
  int n = 0;
  Matrix node_features;  // n x c
  std::vector<Edge> edges;
  std::optional<int> label;
  std::optional<Matrix> coords;  // n x 2, synthetic tasks only

  void validate() const;  // throws on out-of-range endpoints or feature mismatch
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_classes = 0;
  int num_features = 0;
};

/// Disjoint union of graphs: block features, offset-shifted edges, and
/// per-node graph ids.
struct GraphBatch {
  Matrix node_features;     // sum(n_i) x c
  std::vector<Edge> edges;  // indices shifted per graph
  std::vector<int> graph_id;
  std::vector<int> node_counts;
  std::vector<int> offsets;  // first block row of each graph
  std::vector<int> labels;   // label per graph when present

  int num_graphs() const { return static_cast<int>(node_counts.size()); }
  int total_nodes() const { return static_cast<int>(graph_id.size()); }
};

// ---- loaders --------------------------------------------------------------

/// Loads a dataset in the TU text format: `<name>_A.txt` (comma-separated
/// 1-based edge pairs, both directions listed), `<name>_graph_indicator.txt`,
/// `<name>_graph_labels.txt`, and optionally `<name>_node_labels.txt`.
/// Node features are one-hot node labels when present, otherwise one-hot
/// degree capped at `degree_cap` (<=0 means the observed maximum).
Dataset load_tu_dataset(const std::string& dir, const std::string& name,
                        int degree_cap = 0);

/// Writes `ds` back out in the TU text format (inverse of load_tu_dataset for
/// node-labeled datasets).
void save_tu_dataset(const Dataset& ds, const std::string& dir,
                     const std::vector<std::vector<int>>& node_labels);

// ---- synthetic generators -------------------------------------------------

/// n nodes on the unit circle at angles 2*pi*i/n, edges (i, i+1 mod n).
/// Node features are the coordinates.
Graph gen_ring(int n);

/// rows x cols lattice normalized into [0,1]^2 with 4-neighbor edges.
Graph gen_grid(int rows, int cols);

/// m distinct undirected edges sampled uniformly without replacement,
/// constant scalar node feature 1.0.
Graph gen_erdos_renyi(int n, long m, std::uint64_t seed);

// ---- splitting & batching -------------------------------------------------

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// k stratified folds; per fold, validation is a stratified 10% of the
/// remaining training indices. Deterministic given the seed.
std::vector<FoldSplit> stratified_kfold(const Dataset& ds, int k,
                                        std::uint64_t seed);

GraphBatch make_batch(const std::vector<Graph>& graphs);
GraphBatch make_batch(const Dataset& ds, const std::vector<int>& indices);
std::vector<Graph> split_batch(const GraphBatch& batch);

// ---- exports --------------------------------------------------------------

/// `node_id,x,y` plus a `src,dst` edge file for synthetic graphs.
void export_graph_csv(const Graph& g, const std::string& node_path,
                      const std::string& edge_path);

}  // namespace gmt
