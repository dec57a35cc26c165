#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gmt {

/// Full description of a run; a run is reproducible from a RunConfig plus its
/// seed alone. Serialized as a flat key=value file; command-line flags win
/// over file values.
struct RunConfig {
  std::string task = "classify";  // classify | reconstruct | bench-memory | bench-time

  // data
  std::string dataset = "MUTAG";
  std::string data_dir = "data";
  std::string graph = "ring";  // ring | grid (reconstruction)
  int n = 64;
  int rows = 8;
  int cols = 8;

  // model
  std::string pool = "gmt";
  double ratio = 0.25;
  int hidden = 128;
  int heads = 4;

  // optimization
  double lr = 5e-4;
  int batch_size = 128;
  double weight_decay = 1e-4;
  double dropout = 0.5;
  int max_epochs = 500;
  int patience = 50;

  // protocol
  int folds = 10;
  int seeds = 1;
  std::uint64_t seed = 0;
  std::string objective = "x";  // x | a (reconstruction)
  int jobs = 1;

  // benchmarks
  std::vector<int> sweep = {1000, 2000, 4000, 8000};
  std::string methods = "gmt,mean,topk,cluster";
  int bench_k = 4;
  int bench_batch = 50;

  std::string out_dir = "out";

  /// Throws a usage error naming the offending field.
  void validate() const;
};

/// Defaults matching the reconstruction protocol (lr 5e-3, hidden 32, one
/// attention head, patience 1000, up to 10000 epochs).
RunConfig reconstruction_defaults();
/// Benchmark defaults (hidden 32).
RunConfig bench_defaults();

RunConfig parse_config_file(const std::string& path, RunConfig base = {});
std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config_string(const std::string& text, RunConfig base = {});

}  // namespace gmt
