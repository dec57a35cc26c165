#pragma once

#include "gmt/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmt {

struct BenchRecord {
  int n = 0;
  long m = 0;
  std::string method;
  std::int64_t peak_scalars = 0;  // peak live 64-bit scalars during forward
  double wall_ms = 0.0;
};

/// Peak live-scalar sweep: for each n in the sweep, one random sparse graph
/// with m = 2n edges is pooled down to bench_k rows by each method, gradients
/// disabled. Parameters are excluded from the peak (reset after model build).
std::vector<BenchRecord> bench_memory(const RunConfig& cfg);

/// Wall-clock sweep over dense-ish batches: bench_batch graphs of n nodes and
/// m = n^2/10 edges each, forward only; median of 5 timed repetitions after
/// one warmup.
std::vector<BenchRecord> bench_time(const RunConfig& cfg);

void write_bench_csv(const std::vector<BenchRecord>& records,
                     const std::string& path);

std::vector<std::string> parse_method_list(const std::string& csv);

}  // namespace gmt
