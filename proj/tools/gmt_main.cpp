#include <CLI11.hpp>

#include "gmt/commands.hpp"

#include <functional>
#include <iostream>
#include <string>

namespace {

using gmt::RunConfig;

struct SubcommandState {
  RunConfig defaults;
  std::string config_path;
  // flag values; applied over the config file only when actually passed
  RunConfig flags;
  CLI::App* app = nullptr;
};

void add_common_options(SubcommandState& s) {
  auto* app = s.app;
  app->add_option("--config", s.config_path, "key=value config file");
  app->add_option("--seed", s.flags.seed, "base RNG seed");
  app->add_option("--out", s.flags.out_dir, "output directory");
  app->add_option("--pool", s.flags.pool, "pooling method");
  app->add_option("--ratio", s.flags.ratio, "pooling ratio in (0, 1]");
  app->add_option("--hidden", s.flags.hidden, "hidden dimension");
  app->add_option("--heads", s.flags.heads, "attention heads");
  app->add_option("--lr", s.flags.lr, "learning rate");
  app->add_option("--batch-size", s.flags.batch_size, "minibatch size");
  app->add_option("--weight-decay", s.flags.weight_decay, "L2 coefficient");
  app->add_option("--dropout", s.flags.dropout, "dropout rate");
  app->add_option("--max-epochs", s.flags.max_epochs, "epoch cap");
  app->add_option("--patience", s.flags.patience, "early-stopping patience");
}

RunConfig resolve(SubcommandState& s) {
  RunConfig cfg = s.defaults;
  if (!s.config_path.empty()) cfg = gmt::parse_config_file(s.config_path, cfg);
  auto take = [&](const std::string& name, auto member) {
    auto* opt = s.app->get_option_no_throw(name);
    if (opt && opt->count() > 0) cfg.*member = s.flags.*member;
  };
  take("--seed", &RunConfig::seed);
  take("--out", &RunConfig::out_dir);
  take("--pool", &RunConfig::pool);
  take("--ratio", &RunConfig::ratio);
  take("--hidden", &RunConfig::hidden);
  take("--heads", &RunConfig::heads);
  take("--lr", &RunConfig::lr);
  take("--batch-size", &RunConfig::batch_size);
  take("--weight-decay", &RunConfig::weight_decay);
  take("--dropout", &RunConfig::dropout);
  take("--max-epochs", &RunConfig::max_epochs);
  take("--patience", &RunConfig::patience);
  take("--dataset", &RunConfig::dataset);
  take("--data-dir", &RunConfig::data_dir);
  take("--folds", &RunConfig::folds);
  take("--seeds", &RunConfig::seeds);
  take("--jobs", &RunConfig::jobs);
  take("--graph", &RunConfig::graph);
  take("--n", &RunConfig::n);
  take("--rows", &RunConfig::rows);
  take("--cols", &RunConfig::cols);
  take("--objective", &RunConfig::objective);
  take("--sweep", &RunConfig::sweep);
  take("--methods", &RunConfig::methods);
  take("--k", &RunConfig::bench_k);
  take("--graphs", &RunConfig::bench_batch);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph pooling engine: training, reconstruction, benchmarks"};
  app.require_subcommand(1);

  int rc = 0;
  auto wire = [&](SubcommandState& s,
                  std::function<int(const RunConfig&, std::ostream&)> fn) {
    s.app->callback([&s, fn, &rc] {
      RunConfig cfg = resolve(s);
      rc = fn(cfg, std::cout);
    });
  };

  SubcommandState cls;
  cls.defaults.task = "classify";
  cls.app = app.add_subcommand("classify", "k-fold graph classification");
  add_common_options(cls);
  cls.app->add_option("--dataset", cls.flags.dataset, "TU dataset name");
  cls.app->add_option("--data-dir", cls.flags.data_dir, "dataset root directory");
  cls.app->add_option("--folds", cls.flags.folds, "cross-validation folds");
  cls.app->add_option("--seeds", cls.flags.seeds, "number of seeds");
  cls.app->add_option("--jobs", cls.flags.jobs, "parallel fold workers");
  wire(cls, gmt::cmd_classify);

  SubcommandState rec;
  rec.defaults = gmt::reconstruction_defaults();
  rec.app = app.add_subcommand("reconstruct",
                               "synthetic coordinate reconstruction");
  add_common_options(rec);
  rec.app->add_option("--graph", rec.flags.graph, "ring | grid");
  rec.app->add_option("--n", rec.flags.n, "ring size");
  rec.app->add_option("--rows", rec.flags.rows, "grid rows");
  rec.app->add_option("--cols", rec.flags.cols, "grid cols");
  rec.app->add_option("--objective", rec.flags.objective,
                      "x (features) | a (adjacency)");
  wire(rec, gmt::cmd_reconstruct);

  SubcommandState bm;
  bm.defaults = gmt::bench_defaults();
  bm.app = app.add_subcommand("bench-memory", "peak live-scalar sweep");
  add_common_options(bm);
  bm.app->add_option("--sweep", bm.flags.sweep, "node counts")->delimiter(',');
  bm.app->add_option("--methods", bm.flags.methods, "comma-separated methods");
  bm.app->add_option("--k", bm.flags.bench_k, "pooled size");
  wire(bm, gmt::cmd_bench_memory);

  SubcommandState bt;
  bt.defaults = gmt::bench_defaults();
  bt.defaults.task = "bench-time";
  bt.defaults.sweep = {100, 200, 400, 800};
  bt.app = app.add_subcommand("bench-time", "forward wall-clock sweep");
  add_common_options(bt);
  bt.app->add_option("--sweep", bt.flags.sweep, "node counts")->delimiter(',');
  bt.app->add_option("--methods", bt.flags.methods, "comma-separated methods");
  bt.app->add_option("--k", bt.flags.bench_k, "pooled size");
  bt.app->add_option("--graphs", bt.flags.bench_batch, "graphs per batch");
  wire(bt, gmt::cmd_bench_time);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
