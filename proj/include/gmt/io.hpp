#pragma once

#include "gmt/config.hpp"
#include "gmt/graph.hpp"
#include "gmt/train.hpp"

#include <string>
#include <vector>

namespace gmt {

/// epoch,train_loss,val_loss,val_acc
void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::string& path);

/// node_id,x_true,y_true,x_rec,y_rec
void write_recon_csv(const Matrix& x_true, const Matrix& x_rec,
                     const std::string& path);

/// Scatter overlay: original coordinates in gray, reconstructed positions
/// colored, with the graph's edges drawn under the original points.
void write_recon_svg(const Graph& g, const Matrix& x_rec,
                     const std::string& path);

struct FoldResult {
  int fold = 0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

/// fold,seed,test_accuracy,best_val_loss,best_epoch plus mean/std summary rows.
void write_fold_csv(const std::vector<FoldResult>& folds,
                    const std::string& path);

double mean_of(const std::vector<double>& xs);
double stddev_of(const std::vector<double>& xs);  // population std

/// Serialized config + seed + source revision, written as run.json.
void write_run_provenance(const RunConfig& cfg, const std::string& dir);

void ensure_dir(const std::string& dir);

}  // namespace gmt
