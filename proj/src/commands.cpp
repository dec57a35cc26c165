#include "gmt/commands.hpp"

#include "gmt/bench.hpp"
#include "gmt/io.hpp"
#include "gmt/models.hpp"
#include "gmt/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace gmt {

namespace {

int pool_size_for(const Dataset& ds, const std::vector<int>& train,
                  double ratio) {
  int n_max = 0;
  for (int i : train)
    n_max = std::max(n_max, ds.graphs[static_cast<std::size_t>(i)].n);
  return std::max(1, static_cast<int>(std::ceil(ratio * n_max)));
}

struct FoldJob {
  int fold;
  std::uint64_t seed;
};

}  // namespace

int cmd_classify(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  Dataset ds;
  try {
    ds = load_tu_dataset(cfg.data_dir, cfg.dataset);
  } catch (const std::exception&) {
    // TU archives conventionally use upper-case names; accept `mutag` too
    std::string upper = cfg.dataset;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (upper == cfg.dataset) throw;
    ds = load_tu_dataset(cfg.data_dir, upper);
  }
  auto splits = stratified_kfold(ds, cfg.folds, cfg.seed);
  PoolMethod method = parse_pool_method(cfg.pool);

  std::vector<FoldJob> jobs;
  for (int s = 0; s < cfg.seeds; ++s)
    for (int f = 0; f < cfg.folds; ++f)
      jobs.push_back({f, cfg.seed + static_cast<std::uint64_t>(s)});

  std::vector<FoldResult> results(jobs.size());
  std::vector<EpochMetrics> first_history;
  std::mutex mu;

  auto run_job = [&](std::size_t j) {
    const FoldJob& job = jobs[j];
    const FoldSplit& split = splits[static_cast<std::size_t>(job.fold)];
    int k = pool_size_for(ds, split.train, cfg.ratio);
    // distinct streams for init and for batch order / dropout
    std::mt19937_64 init_rng(job.seed * 7919 + static_cast<std::uint64_t>(job.fold));
    ClassifierModel model(ds.num_features, cfg.hidden, ds.num_classes, k,
                          cfg.heads, method, cfg.ratio, cfg.dropout, init_rng);
    TrainConfig tc{cfg.lr,      cfg.batch_size, cfg.weight_decay, cfg.dropout,
                   cfg.max_epochs, cfg.patience,
                   job.seed * 104729 + static_cast<std::uint64_t>(job.fold)};
    ClassifierRunResult r = train_classifier(model, ds, split, tc);
    results[j] = {job.fold, job.seed, r.test_accuracy, r.best_val_loss,
                  r.best_epoch};
    std::lock_guard<std::mutex> lk(mu);
    if (j == 0) first_history = r.history;
  };

  if (cfg.jobs <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    int nthreads = std::min<int>(cfg.jobs, static_cast<int>(jobs.size()));
    for (int t = 0; t < nthreads; ++t)
      workers.emplace_back([&] {
        for (std::size_t j = next.fetch_add(1); j < jobs.size();
             j = next.fetch_add(1))
          run_job(j);
      });
    for (auto& w : workers) w.join();
  }

  ensure_dir(cfg.out_dir);
  write_fold_csv(results, cfg.out_dir + "/folds.csv");
  if (!first_history.empty())
    write_metrics_csv(first_history, cfg.out_dir + "/metrics_fold0.csv");
  write_run_provenance(cfg, cfg.out_dir);

  std::vector<double> accs;
  for (const auto& r : results) accs.push_back(r.test_accuracy);
  out << "dataset " << ds.name << ": " << ds.graphs.size() << " graphs, "
      << ds.num_classes << " classes\n";
  out << "pool=" << cfg.pool << " folds=" << cfg.folds << " seeds=" << cfg.seeds
      << "\n";
  out << "test accuracy " << 100.0 * mean_of(accs) << " +/- "
      << 100.0 * stddev_of(accs) << " %\n";
  return 0;
}

int cmd_reconstruct(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  Graph g = cfg.graph == "ring" ? gen_ring(cfg.n) : gen_grid(cfg.rows, cfg.cols);
  std::mt19937_64 rng(cfg.seed);
  ReconModel model(static_cast<int>(g.node_features.cols()), cfg.hidden, g.n,
                   cfg.ratio, parse_recon_pool(cfg.pool), rng);
  TrainConfig tc{cfg.lr,         cfg.batch_size, cfg.weight_decay, cfg.dropout,
                 cfg.max_epochs, cfg.patience,   cfg.seed};
  ReconObjective obj = cfg.objective == "a" ? ReconObjective::Adjacency
                                            : ReconObjective::Features;
  ReconRunResult r = train_reconstruction(model, g, tc, obj);

  ensure_dir(cfg.out_dir);
  write_recon_csv(g.node_features, r.x_rec, cfg.out_dir + "/recon.csv");
  write_recon_svg(g, r.x_rec, cfg.out_dir + "/recon.svg");
  {
    std::ofstream loss(cfg.out_dir + "/loss.csv");
    loss.precision(12);
    loss << "epoch,train_loss\n";
    for (std::size_t e = 0; e < r.loss_history.size(); ++e)
      loss << (e + 1) << "," << r.loss_history[e] << "\n";
  }
  if (r.has_assignment)
    export_assignment_csv(r.assignment, cfg.out_dir + "/assignment.csv");
  write_run_provenance(cfg, cfg.out_dir);

  out << "graph " << cfg.graph << " n=" << g.n << " pool=" << cfg.pool
      << " k=" << model.k << " objective=" << cfg.objective << "\n";
  out << "epochs " << r.epochs_run << ", best train loss " << r.best_train_loss
      << "\n";
  out << "feature mse " << r.errors.x_mse << "\n";
  if (r.errors.has_adjacency)
    out << "adjacency mse " << r.errors.a_mse << "\n";
  return 0;
}

namespace {

int run_bench(const RunConfig& cfg, std::ostream& out, bool memory) {
  cfg.validate();
  auto records = memory ? bench_memory(cfg) : bench_time(cfg);
  ensure_dir(cfg.out_dir);
  write_bench_csv(records,
                  cfg.out_dir + (memory ? "/bench_memory.csv" : "/bench_time.csv"));
  write_run_provenance(cfg, cfg.out_dir);
  out << "n,m,method," << (memory ? "peak_scalars" : "median_ms") << "\n";
  for (const auto& r : records)
    out << r.n << "," << r.m << "," << r.method << ","
        << (memory ? static_cast<double>(r.peak_scalars) : r.wall_ms) << "\n";
  return 0;
}

}  // namespace

int cmd_bench_memory(const RunConfig& cfg, std::ostream& out) {
  return run_bench(cfg, out, /*memory=*/true);
}

int cmd_bench_time(const RunConfig& cfg, std::ostream& out) {
  return run_bench(cfg, out, /*memory=*/false);
}

}  // namespace gmt
