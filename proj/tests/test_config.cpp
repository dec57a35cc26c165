#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gmt/bench.hpp"
#include "gmt/config.hpp"

#include <filesystem>
#include <fstream>

using namespace gmt;

TEST_CASE("config serialization round-trips every field") {
  RunConfig cfg;
  cfg.task = "reconstruct";
  cfg.dataset = "PROTEINS";
  cfg.data_dir = "/tmp/data";
  cfg.graph = "grid";
  cfg.n = 77;
  cfg.rows = 5;
  cfg.cols = 9;
  cfg.pool = "topk";
  cfg.ratio = 0.33;
  cfg.hidden = 48;
  cfg.heads = 2;
  cfg.lr = 1.25e-3;
  cfg.batch_size = 17;
  cfg.weight_decay = 3e-5;
  cfg.dropout = 0.25;
  cfg.max_epochs = 123;
  cfg.patience = 11;
  cfg.folds = 5;
  cfg.seeds = 3;
  cfg.seed = 987654321;
  cfg.objective = "a";
  cfg.jobs = 4;
  cfg.sweep = {10, 20, 40};
  cfg.methods = "gmt,cluster";
  cfg.bench_k = 8;
  cfg.bench_batch = 25;
  cfg.out_dir = "/tmp/out";

  RunConfig back = parse_config_string(serialize_config(cfg));
  CHECK(serialize_config(back) == serialize_config(cfg));
  CHECK(back.lr == cfg.lr);
  CHECK(back.sweep == cfg.sweep);
  CHECK(back.seed == cfg.seed);
}

TEST_CASE("config file values override defaults; later keys win") {
  std::string text = "hidden = 64\nhidden = 96\npool = cluster\n";
  RunConfig cfg = parse_config_string(text);
  CHECK(cfg.hidden == 96);
  CHECK(cfg.pool == "cluster");
  CHECK(cfg.heads == 4);  // untouched default
}

TEST_CASE("config parser flags unknown keys and bad values with line numbers") {
  CHECK_THROWS_WITH_AS(parse_config_string("bogus = 1\n"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_string("\n\nhidden = soft\n"),
                       doctest::Contains("line 3"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_string("no_equals_sign\n"),
                       doctest::Contains("key=value"), std::invalid_argument);
}

TEST_CASE("config comments and blank lines are ignored") {
  RunConfig cfg = parse_config_string("# a comment\n\n  lr = 0.01\n");
  CHECK(cfg.lr == 0.01);
}

TEST_CASE("validation rejects out-of-range settings") {
  RunConfig cfg;
  cfg.ratio = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("ratio"),
                       std::invalid_argument);
  cfg = RunConfig{};
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.task = "segment";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.sweep = {100, -5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  RunConfig ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("missing config file is an error") {
  CHECK_THROWS(parse_config_file("/nonexistent/path/config.txt"));
}

TEST_CASE("method list parsing") {
  auto ms = parse_method_list("gmt, mean ,cluster");
  CHECK(ms == std::vector<std::string>{"gmt", "mean", "cluster"});
  CHECK_THROWS(parse_method_list(" , "));
}

TEST_CASE("memory benchmark is deterministic and rejects empty graphs") {
  RunConfig cfg = bench_defaults();
  cfg.sweep = {40, 80};
  cfg.methods = "gmt,cluster";
  cfg.bench_k = 4;
  auto a = bench_memory(cfg);
  auto b = bench_memory(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].peak_scalars > 0);
    CHECK(a[i].peak_scalars == b[i].peak_scalars);
    CHECK(a[i].m == 2 * a[i].n);
  }
  cfg.sweep = {0};
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("time benchmark: positive medians, monotone in n for gmt") {
  RunConfig cfg = bench_defaults();
  cfg.task = "bench-time";
  cfg.sweep = {20, 40, 80};
  cfg.methods = "gmt";
  cfg.bench_batch = 4;
  auto rec = bench_time(cfg);
  REQUIRE(rec.size() == 3);
  double prev = 0.0;
  for (const auto& r : rec) {
    CHECK(r.wall_ms > 0.0);
    CHECK(r.wall_ms >= prev * 0.5);  // allow jitter, forbid gross inversions
    prev = r.wall_ms;
  }
  CHECK(rec[2].wall_ms > rec[0].wall_ms);
}

TEST_CASE("task-specific default profiles") {
  RunConfig r = reconstruction_defaults();
  CHECK(r.lr == 5e-3);
  CHECK(r.hidden == 32);
  CHECK(r.heads == 1);
  CHECK(r.patience == 1000);
  CHECK(r.max_epochs == 10000);
  RunConfig b = bench_defaults();
  CHECK(b.hidden == 32);
}
