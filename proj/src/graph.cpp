#include "gmt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gmt {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void load_error(const std::string& file, long line,
                             const std::string& what) {
  std::ostringstream os;
  os << file << ":" << line << ": " << what;
  throw std::runtime_error(os.str());
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

long parse_int(const std::string& tok, const std::string& file, long line) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(tok, &pos);
  } catch (const std::exception&) {
    load_error(file, line, "non-integer token '" + tok + "'");
  }
  if (pos != tok.size()) load_error(file, line, "non-integer token '" + tok + "'");
  return v;
}

bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return static_cast<bool>(in);
}

}  // namespace

void Graph::validate() const {
  if (node_features.rows() != n)
    throw std::invalid_argument("Graph: feature row count != n");
  for (const auto& [u, v] : edges)
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("Graph: edge endpoint out of range");
}

Dataset load_tu_dataset(const std::string& dir, const std::string& name,
                        int degree_cap) {
  const std::string base = dir + "/" + name + "/" + name;
  const std::string a_file = base + "_A.txt";
  const std::string ind_file = base + "_graph_indicator.txt";
  const std::string glab_file = base + "_graph_labels.txt";
  const std::string nlab_file = base + "_node_labels.txt";

  auto ind_lines = read_lines(ind_file);
  int total_nodes = static_cast<int>(ind_lines.size());
  std::vector<int> graph_of_node(total_nodes);
  int num_graphs = 0;
  for (int i = 0; i < total_nodes; ++i) {
    long g = parse_int(ind_lines[static_cast<std::size_t>(i)], ind_file, i + 1);
    if (g < 1) load_error(ind_file, i + 1, "graph id must be >= 1");
    graph_of_node[i] = static_cast<int>(g - 1);
    num_graphs = std::max(num_graphs, static_cast<int>(g));
  }

  auto glab_lines = read_lines(glab_file);
  if (static_cast<int>(glab_lines.size()) != num_graphs)
    load_error(glab_file, static_cast<long>(glab_lines.size()),
               "graph label count does not match graph indicator");
  std::vector<long> raw_labels(glab_lines.size());
  for (std::size_t i = 0; i < glab_lines.size(); ++i)
    raw_labels[i] = parse_int(glab_lines[i], glab_file, static_cast<long>(i + 1));
  // remap labels to contiguous 0-based class indices
  std::map<long, int> label_map;
  for (long l : raw_labels) label_map.emplace(l, 0);
  {
    int c = 0;
    for (auto& [k, v] : label_map) v = c++;
  }

  // node index offset per graph (file indices are global and 1-based)
  std::vector<int> node_count(num_graphs, 0), node_offset(num_graphs, 0);
  for (int g : graph_of_node) node_count[g]++;
  for (int g = 1; g < num_graphs; ++g)
    node_offset[g] = node_offset[g - 1] + node_count[g - 1];
  // TU files list nodes of each graph contiguously; verify
  {
    std::vector<int> seen(num_graphs, 0);
    for (int i = 0; i < total_nodes; ++i) {
      int g = graph_of_node[i];
      if (i != node_offset[g] + seen[g])
        load_error(ind_file, i + 1, "graph indicator not contiguous");
      seen[g]++;
    }
  }

  std::vector<std::set<Edge>> edge_sets(num_graphs);
  auto a_lines = read_lines(a_file);
  for (std::size_t li = 0; li < a_lines.size(); ++li) {
    std::string line = a_lines[li];
    auto comma = line.find(',');
    if (comma == std::string::npos)
      load_error(a_file, static_cast<long>(li + 1), "expected 'u, v'");
    std::string lhs = line.substr(0, comma), rhs = line.substr(comma + 1);
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      return s;
    };
    long u1 = parse_int(strip(lhs), a_file, static_cast<long>(li + 1));
    long v1 = parse_int(strip(rhs), a_file, static_cast<long>(li + 1));
    if (u1 < 1 || u1 > total_nodes || v1 < 1 || v1 > total_nodes)
      load_error(a_file, static_cast<long>(li + 1), "node index out of range");
    int u = static_cast<int>(u1 - 1), v = static_cast<int>(v1 - 1);
    if (graph_of_node[u] != graph_of_node[v])
      load_error(a_file, static_cast<long>(li + 1), "edge crosses graphs");
    if (u == v) continue;
    int g = graph_of_node[u];
    int lu = u - node_offset[g], lv = v - node_offset[g];
    edge_sets[g].insert({std::min(lu, lv), std::max(lu, lv)});
  }

  bool has_node_labels = file_exists(nlab_file);
  std::vector<int> node_label(total_nodes, 0);
  int num_node_labels = 0;
  if (has_node_labels) {
    auto nl = read_lines(nlab_file);
    if (static_cast<int>(nl.size()) != total_nodes)
      load_error(nlab_file, static_cast<long>(nl.size()),
                 "node label count does not match graph indicator");
    std::map<long, int> remap;  // labels assumed contiguous from their minimum,
                                // but remapped defensively
    std::vector<long> raw(nl.size());
    for (std::size_t i = 0; i < nl.size(); ++i) {
      raw[i] = parse_int(nl[i], nlab_file, static_cast<long>(i + 1));
      remap.emplace(raw[i], 0);
    }
    int c = 0;
    for (auto& [k, v] : remap) v = c++;
    num_node_labels = c;
    for (int i = 0; i < total_nodes; ++i)
      node_label[i] = remap.at(raw[static_cast<std::size_t>(i)]);
  }

  Dataset ds;
  ds.name = name;
  ds.num_classes = static_cast<int>(label_map.size());

  std::vector<std::vector<int>> degrees(num_graphs);
  int max_degree = 0;
  for (int g = 0; g < num_graphs; ++g) {
    degrees[g].assign(static_cast<std::size_t>(node_count[g]), 0);
    for (const auto& [u, v] : edge_sets[g]) {
      degrees[g][static_cast<std::size_t>(u)]++;
      degrees[g][static_cast<std::size_t>(v)]++;
    }
    for (int d : degrees[g]) max_degree = std::max(max_degree, d);
  }
  int cap = has_node_labels ? 0
                            : (degree_cap > 0 ? degree_cap : max_degree);
  ds.num_features = has_node_labels ? num_node_labels : cap + 1;

  for (int g = 0; g < num_graphs; ++g) {
    Graph gr;
    gr.n = node_count[g];
    gr.edges.assign(edge_sets[g].begin(), edge_sets[g].end());
    gr.label = label_map.at(raw_labels[static_cast<std::size_t>(g)]);
    gr.node_features = Matrix::Zero(gr.n, ds.num_features);
    for (int i = 0; i < gr.n; ++i) {
      int feat = has_node_labels
                     ? node_label[static_cast<std::size_t>(node_offset[g] + i)]
                     : std::min(degrees[g][static_cast<std::size_t>(i)], cap);
      gr.node_features(i, feat) = 1.0;
    }
    gr.validate();
    ds.graphs.push_back(std::move(gr));
  }
  return ds;
}

void save_tu_dataset(const Dataset& ds, const std::string& dir,
                     const std::vector<std::vector<int>>& node_labels) {
  const std::string base = dir + "/" + ds.name + "/" + ds.name;
  std::ofstream a(base + "_A.txt"), ind(base + "_graph_indicator.txt"),
      glab(base + "_graph_labels.txt");
  if (!a || !ind || !glab)
    throw std::runtime_error("cannot write TU files under " + dir);
  std::ofstream nlab;
  if (!node_labels.empty()) nlab.open(base + "_node_labels.txt");

  int offset = 0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& gr = ds.graphs[g];
    for (const auto& [u, v] : gr.edges) {
      a << (offset + u + 1) << ", " << (offset + v + 1) << "\n";
      a << (offset + v + 1) << ", " << (offset + u + 1) << "\n";
    }
    for (int i = 0; i < gr.n; ++i) {
      ind << (g + 1) << "\n";
      if (!node_labels.empty()) nlab << node_labels[g][static_cast<std::size_t>(i)] << "\n";
    }
    glab << (gr.label ? *gr.label : 0) << "\n";
    offset += gr.n;
  }
}

Graph gen_ring(int n) {
  if (n < 3) throw std::invalid_argument("gen_ring: n must be >= 3");
  Graph g;
  g.n = n;
  Matrix coords(n, 2);
  for (int i = 0; i < n; ++i) {
    double a = 2.0 * kPi * i / n;
    coords(i, 0) = std::cos(a);
    coords(i, 1) = std::sin(a);
    g.edges.push_back({i, (i + 1) % n});
  }
  g.node_features = coords;
  g.coords = coords;
  return g;
}

Graph gen_grid(int rows, int cols) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("gen_grid: rows and cols must be >= 2");
  Graph g;
  g.n = rows * cols;
  Matrix coords(g.n, 2);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      coords(id(r, c), 0) = cols > 1 ? static_cast<double>(c) / (cols - 1) : 0.0;
      coords(id(r, c), 1) = rows > 1 ? static_cast<double>(r) / (rows - 1) : 0.0;
      if (c + 1 < cols) g.edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) g.edges.push_back({id(r, c), id(r + 1, c)});
    }
  g.node_features = coords;
  g.coords = coords;
  return g;
}

Graph gen_erdos_renyi(int n, long m, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("gen_erdos_renyi: n must be positive");
  long max_edges = static_cast<long>(n) * (n - 1) / 2;
  if (m < 0 || m > max_edges)
    throw std::invalid_argument("gen_erdos_renyi: m exceeds n(n-1)/2");
  Graph g;
  g.n = n;
  g.node_features = Matrix::Ones(n, 1);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::set<Edge> chosen;
  while (static_cast<long>(chosen.size()) < m) {
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    chosen.insert({std::min(u, v), std::max(u, v)});
  }
  g.edges.assign(chosen.begin(), chosen.end());
  return g;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& ds, int k,
                                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    if (!ds.graphs[i].label)
      throw std::invalid_argument("stratified_kfold: unlabeled graph");
    by_class[*ds.graphs[i].label].push_back(static_cast<int>(i));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  for (auto& [cls, idx] : by_class) {
    if (static_cast<int>(idx.size()) < k)
      throw std::invalid_argument("stratified_kfold: class " +
                                  std::to_string(cls) + " has fewer than k members");
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j)
      folds[j % static_cast<std::size_t>(k)].push_back(idx[j]);
  }

  std::vector<FoldSplit> splits;
  for (int f = 0; f < k; ++f) {
    FoldSplit s;
    s.test = folds[static_cast<std::size_t>(f)];
    std::map<int, std::vector<int>> pool_by_class;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      for (int i : folds[static_cast<std::size_t>(g)])
        pool_by_class[*ds.graphs[static_cast<std::size_t>(i)].label].push_back(i);
    }
    for (auto& [cls, idx] : pool_by_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      std::size_t n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(0.1 * idx.size())));
      for (std::size_t j = 0; j < idx.size(); ++j)
        (j < n_val ? s.val : s.train).push_back(idx[j]);
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

GraphBatch make_batch(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("make_batch: empty graph list");
  Eigen::Index c = graphs[0].node_features.cols();
  int total = 0;
  for (const auto& g : graphs) {
    if (g.node_features.cols() != c)
      throw std::invalid_argument("make_batch: mixed feature dimensions");
    total += g.n;
  }
  GraphBatch b;
  b.node_features = Matrix(total, c);
  int off = 0, gid = 0;
  for (const auto& g : graphs) {
    b.node_features.middleRows(off, g.n) = g.node_features;
    for (const auto& [u, v] : g.edges) b.edges.push_back({off + u, off + v});
    for (int i = 0; i < g.n; ++i) b.graph_id.push_back(gid);
    b.node_counts.push_back(g.n);
    b.offsets.push_back(off);
    if (g.label) b.labels.push_back(*g.label);
    off += g.n;
    ++gid;
  }
  return b;
}

GraphBatch make_batch(const Dataset& ds, const std::vector<int>& indices) {
  std::vector<Graph> gs;
  gs.reserve(indices.size());
  for (int i : indices) gs.push_back(ds.graphs[static_cast<std::size_t>(i)]);
  return make_batch(gs);
}

std::vector<Graph> split_batch(const GraphBatch& batch) {
  std::vector<Graph> out;
  for (int g = 0; g < batch.num_graphs(); ++g) {
    Graph gr;
    gr.n = batch.node_counts[static_cast<std::size_t>(g)];
    gr.node_features =
        batch.node_features.middleRows(batch.offsets[static_cast<std::size_t>(g)], gr.n);
    if (g < static_cast<int>(batch.labels.size()))
      gr.label = batch.labels[static_cast<std::size_t>(g)];
    out.push_back(std::move(gr));
  }
  for (const auto& [u, v] : batch.edges) {
    int g = batch.graph_id[static_cast<std::size_t>(u)];
    if (batch.graph_id[static_cast<std::size_t>(v)] != g)
      throw std::logic_error("split_batch: edge crosses a graph boundary");
    int off = batch.offsets[static_cast<std::size_t>(g)];
    out[static_cast<std::size_t>(g)].edges.push_back({u - off, v - off});
  }
  return out;
}

void export_graph_csv(const Graph& g, const std::string& node_path,
                      const std::string& edge_path) {
  std::ofstream nodes(node_path), edges(edge_path);
  if (!nodes || !edges)
    throw std::runtime_error("export_graph_csv: cannot open output files");
  nodes << "node_id,x,y\n";
  for (int i = 0; i < g.n; ++i) {
    double x = g.coords ? (*g.coords)(i, 0) : g.node_features(i, 0);
    double y = g.coords ? (*g.coords)(i, 1)
                        : (g.node_features.cols() > 1 ? g.node_features(i, 1) : 0.0);
    nodes << i << "," << x << "," << y << "\n";
  }
  edges << "src,dst\n";
  for (const auto& [u, v] : g.edges) edges << u << "," << v << "\n";
}

}  // namespace gmt
