#pragma once

#include "gmt/config.hpp"

#include <iosfwd>

namespace gmt {

/// Subcommand entry points; each validates the config, writes its artifacts
/// under cfg.out_dir (plus run.json), and prints a summary to `out`.
/// Returns a process exit code.
int cmd_classify(const RunConfig& cfg, std::ostream& out);
int cmd_reconstruct(const RunConfig& cfg, std::ostream& out);
int cmd_bench_memory(const RunConfig& cfg, std::ostream& out);
int cmd_bench_time(const RunConfig& cfg, std::ostream& out);

}  // namespace gmt
