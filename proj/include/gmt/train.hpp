#pragma once

#include "gmt/graph.hpp"
#include "gmt/models.hpp"
#include "gmt/nn.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gmt {

struct TrainConfig {
  double lr = 5e-4;
  int batch_size = 128;
  double weight_decay = 1e-4;
  double dropout = 0.5;
  int max_epochs = 500;
  int patience = 50;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainState {
  int epoch = 0;
  double best_loss = 0.0;
  int patience_counter = 0;
  int best_epoch = 0;
};

struct ClassifierRunResult {
  double test_accuracy = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
};

/// Cross-entropy training with Adam and early stopping on validation loss;
/// returns the best-validation checkpoint restored into the model.
ClassifierRunResult train_classifier(ClassifierModel& model, const Dataset& ds,
                                     const FoldSplit& split,
                                     const TrainConfig& cfg);

double evaluate_accuracy(ClassifierModel& model, const Dataset& ds,
                         const std::vector<int>& indices);
double evaluate_loss(ClassifierModel& model, const Dataset& ds,
                     const std::vector<int>& indices);

enum class ReconObjective { Features, Adjacency };

struct ReconErrors {
  double x_mse = 0.0;  // per-entry
  double a_mse = 0.0;
  double x_fro = 0.0;  // raw Frobenius norms
  double a_fro = 0.0;
  bool has_adjacency = false;
};

struct ReconRunResult {
  ReconErrors errors;
  int epochs_run = 0;
  double best_train_loss = 0.0;
  Matrix x_rec;
  Matrix assignment;  // n x k, empty for node-drop pooling
  bool has_assignment = false;
  std::vector<double> loss_history;
};

/// Single-graph MSE training; training loss is the early-stopping monitor
/// (there is no held-out graph). The adjacency objective minimizes the
/// per-entry discrepancy of A vs C (C^T A C) C^T.
ReconRunResult train_reconstruction(ReconModel& model, const Graph& g,
                                    const TrainConfig& cfg,
                                    ReconObjective objective = ReconObjective::Features);

/// Feature and adjacency reconstruction errors of the current model state.
/// Throws for pooling methods without an assignment matrix.
ReconErrors reconstruct_adjacency_error(ReconModel& model, const Graph& g);

}  // namespace gmt
