#include "gmt/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmt {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (task != "classify" && task != "reconstruct" && task != "bench-memory" &&
      task != "bench-time")
    fail("config: unknown task '" + task + "'");
  if (!(ratio > 0.0 && ratio <= 1.0))
    fail("config: ratio must be in (0, 1], got " + std::to_string(ratio));
  if (hidden <= 0) fail("config: hidden must be positive");
  if (heads <= 0) fail("config: heads must be positive");
  if (!(lr > 0.0)) fail("config: lr must be positive");
  if (batch_size <= 0) fail("config: batch_size must be positive");
  if (weight_decay < 0.0) fail("config: weight_decay must be non-negative");
  if (dropout < 0.0 || dropout >= 1.0) fail("config: dropout must be in [0, 1)");
  if (max_epochs <= 0) fail("config: max_epochs must be positive");
  if (patience <= 0) fail("config: patience must be positive");
  if (folds < 2) fail("config: folds must be at least 2");
  if (seeds <= 0) fail("config: seeds must be positive");
  if (jobs <= 0) fail("config: jobs must be positive");
  if (graph != "ring" && graph != "grid")
    fail("config: unknown graph '" + graph + "'");
  if (n <= 0 || rows <= 0 || cols <= 0)
    fail("config: graph sizes must be positive");
  if (objective != "x" && objective != "a")
    fail("config: objective must be 'x' or 'a'");
  if (sweep.empty()) fail("config: sweep must not be empty");
  for (int s : sweep)
    if (s <= 0) fail("config: sweep sizes must be positive");
  if (bench_k <= 0 || bench_batch <= 0)
    fail("config: bench_k and bench_batch must be positive");
}

RunConfig reconstruction_defaults() {
  RunConfig cfg;
  cfg.task = "reconstruct";
  cfg.pool = "gmt";
  cfg.hidden = 32;
  cfg.heads = 1;
  cfg.lr = 5e-3;
  cfg.weight_decay = 0.0;
  cfg.dropout = 0.0;
  cfg.max_epochs = 10000;
  cfg.patience = 1000;
  return cfg;
}

RunConfig bench_defaults() {
  RunConfig cfg;
  cfg.task = "bench-memory";
  cfg.hidden = 32;
  cfg.heads = 1;
  cfg.dropout = 0.0;
  return cfg;
}

RunConfig parse_config_string(const std::string& text, RunConfig cfg) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    bool known = true;
    try {
      if (key == "task") cfg.task = val;
      else if (key == "dataset") cfg.dataset = val;
      else if (key == "data_dir") cfg.data_dir = val;
      else if (key == "graph") cfg.graph = val;
      else if (key == "n") cfg.n = std::stoi(val);
      else if (key == "rows") cfg.rows = std::stoi(val);
      else if (key == "cols") cfg.cols = std::stoi(val);
      else if (key == "pool") cfg.pool = val;
      else if (key == "ratio") cfg.ratio = std::stod(val);
      else if (key == "hidden") cfg.hidden = std::stoi(val);
      else if (key == "heads") cfg.heads = std::stoi(val);
      else if (key == "lr") cfg.lr = std::stod(val);
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
      else if (key == "dropout") cfg.dropout = std::stod(val);
      else if (key == "max_epochs") cfg.max_epochs = std::stoi(val);
      else if (key == "patience") cfg.patience = std::stoi(val);
      else if (key == "folds") cfg.folds = std::stoi(val);
      else if (key == "seeds") cfg.seeds = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "objective") cfg.objective = val;
      else if (key == "jobs") cfg.jobs = std::stoi(val);
      else if (key == "sweep") cfg.sweep = parse_int_list(val);
      else if (key == "methods") cfg.methods = val;
      else if (key == "bench_k") cfg.bench_k = std::stoi(val);
      else if (key == "bench_batch") cfg.bench_batch = std::stoi(val);
      else if (key == "out_dir") cfg.out_dir = val;
      else known = false;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value '" + val + "' for key '" + key + "'");
    }
    if (!known)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), std::move(base));
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "task = " << cfg.task << "\n";
  out << "dataset = " << cfg.dataset << "\n";
  out << "data_dir = " << cfg.data_dir << "\n";
  out << "graph = " << cfg.graph << "\n";
  out << "n = " << cfg.n << "\n";
  out << "rows = " << cfg.rows << "\n";
  out << "cols = " << cfg.cols << "\n";
  out << "pool = " << cfg.pool << "\n";
  out << "ratio = " << cfg.ratio << "\n";
  out << "hidden = " << cfg.hidden << "\n";
  out << "heads = " << cfg.heads << "\n";
  out << "lr = " << cfg.lr << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "weight_decay = " << cfg.weight_decay << "\n";
  out << "dropout = " << cfg.dropout << "\n";
  out << "max_epochs = " << cfg.max_epochs << "\n";
  out << "patience = " << cfg.patience << "\n";
  out << "folds = " << cfg.folds << "\n";
  out << "seeds = " << cfg.seeds << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "objective = " << cfg.objective << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  out << "sweep = " << join_ints(cfg.sweep) << "\n";
  out << "methods = " << cfg.methods << "\n";
  out << "bench_k = " << cfg.bench_k << "\n";
  out << "bench_batch = " << cfg.bench_batch << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

}  // namespace gmt
