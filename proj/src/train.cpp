#include "gmt/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gmt {

namespace {

std::vector<int> batch_labels(const Dataset& ds, const std::vector<int>& idx) {
  std::vector<int> labels;
  labels.reserve(idx.size());
  for (int i : idx) {
    if (!ds.graphs[static_cast<std::size_t>(i)].label)
      throw std::invalid_argument("classification requires labeled graphs");
    labels.push_back(*ds.graphs[static_cast<std::size_t>(i)].label);
  }
  return labels;
}

double eval_split_loss(ClassifierModel& model, const Dataset& ds,
                       const std::vector<int>& idx, int batch_size,
                       std::mt19937_64& rng, double* acc_out) {
  NoGradGuard ng;
  double total = 0.0;
  int correct = 0;
  for (std::size_t pos = 0; pos < idx.size(); pos += static_cast<std::size_t>(batch_size)) {
    std::vector<int> chunk(idx.begin() + static_cast<long>(pos),
                           idx.begin() + static_cast<long>(std::min(
                               pos + static_cast<std::size_t>(batch_size), idx.size())));
    GraphBatch batch = make_batch(ds, chunk);
    BatchAdj adj = build_batch_adj(batch);
    Tensor logits = model.forward(batch, adj, rng, /*training=*/false);
    Tensor loss = cross_entropy_with_logits(logits, batch_labels(ds, chunk));
    total += loss.value()(0, 0) * static_cast<double>(chunk.size());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::Index argmax;
      logits.value().row(r).maxCoeff(&argmax);
      if (static_cast<int>(argmax) == batch.labels[static_cast<std::size_t>(r)])
        ++correct;
    }
  }
  if (acc_out)
    *acc_out = idx.empty() ? 0.0 : static_cast<double>(correct) / idx.size();
  return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace

ClassifierRunResult train_classifier(ClassifierModel& model, const Dataset& ds,
                                     const FoldSplit& split,
                                     const TrainConfig& cfg) {
  if (split.train.empty() || split.val.empty() || split.test.empty())
    throw std::invalid_argument("train_classifier: empty split");
  std::mt19937_64 rng(cfg.seed);
  Adam opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  auto params = model.parameters();

  ClassifierRunResult result;
  TrainState state;
  state.best_loss = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best = snapshot(params);

  std::vector<int> train_idx = split.train;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double train_loss = 0.0;
    for (std::size_t pos = 0; pos < train_idx.size();
         pos += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<int> chunk(
          train_idx.begin() + static_cast<long>(pos),
          train_idx.begin() + static_cast<long>(std::min(
              pos + static_cast<std::size_t>(cfg.batch_size), train_idx.size())));
      GraphBatch batch = make_batch(ds, chunk);
      BatchAdj adj = build_batch_adj(batch);
      opt.zero_grad(params);
      Tensor logits = model.forward(batch, adj, rng, /*training=*/true);
      Tensor loss = cross_entropy_with_logits(logits, batch_labels(ds, chunk));
      backward(loss);
      opt.step(params);
      train_loss += loss.value()(0, 0) * static_cast<double>(chunk.size());
    }
    train_loss /= static_cast<double>(train_idx.size());

    double val_acc = 0.0;
    double val_loss =
        eval_split_loss(model, ds, split.val, cfg.batch_size, rng, &val_acc);
    result.history.push_back({epoch, train_loss, val_loss, val_acc});

    if (val_loss < state.best_loss) {
      state.best_loss = val_loss;
      state.best_epoch = epoch;
      state.patience_counter = 0;
      best = snapshot(params);
    } else {
      state.patience_counter += 1;
      if (state.patience_counter >= cfg.patience) break;
    }
  }

  restore(params, best);
  result.best_val_loss = state.best_loss;
  result.best_epoch = state.best_epoch;
  result.test_accuracy = evaluate_accuracy(model, ds, split.test);
  return result;
}

double evaluate_accuracy(ClassifierModel& model, const Dataset& ds,
                         const std::vector<int>& indices) {
  std::mt19937_64 rng(0);  // unused in eval mode
  double acc = 0.0;
  eval_split_loss(model, ds, indices, 128, rng, &acc);
  return acc;
}

double evaluate_loss(ClassifierModel& model, const Dataset& ds,
                     const std::vector<int>& indices) {
  std::mt19937_64 rng(0);
  return eval_split_loss(model, ds, indices, 128, rng, nullptr);
}

namespace {

Tensor adjacency_loss(const ReconModel::ForwardResult& fwd, const Matrix& a_dense) {
  if (!fwd.has_assignment)
    throw std::invalid_argument(
        "adjacency objective requires a pooling method with an assignment matrix");
  Tensor a(a_dense);
  Tensor a_pool = matmul(transpose(fwd.c), matmul(a, fwd.c));
  Tensor a_rec = matmul(fwd.c, matmul(a_pool, transpose(fwd.c)));
  return mse_loss(a_rec, a_dense);
}

ReconErrors compute_errors(ReconModel& model, const Graph& g, const NormAdj& adj,
                           bool require_assignment) {
  NoGradGuard ng;
  auto fwd = model.forward(g, adj);
  ReconErrors err;
  Matrix dx = fwd.x_rec.value() - g.node_features;
  err.x_fro = dx.norm();
  err.x_mse = dx.array().square().mean();
  if (fwd.has_assignment) {
    Matrix a = dense_adjacency(g.n, g.edges);
    const Matrix& c = fwd.c.value();
    Matrix a_pool = c.transpose() * a * c;
    Matrix da = a - c * a_pool * c.transpose();
    err.a_fro = da.norm();
    err.a_mse = da.array().square().mean();
    err.has_adjacency = true;
  } else if (require_assignment) {
    throw std::invalid_argument(
        "reconstruct_adjacency_error: pooling method has no assignment matrix");
  }
  return err;
}

}  // namespace

ReconRunResult train_reconstruction(ReconModel& model, const Graph& g,
                                    const TrainConfig& cfg,
                                    ReconObjective objective) {
  if (g.node_features.size() == 0)
    throw std::invalid_argument("train_reconstruction: graph has no feature targets");
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  Matrix a_dense;
  if (objective == ReconObjective::Adjacency)
    a_dense = dense_adjacency(g.n, g.edges);

  Adam opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  auto params = model.parameters();

  ReconRunResult result;
  TrainState state;
  state.best_loss = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best = snapshot(params);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    opt.zero_grad(params);
    auto fwd = model.forward(g, adj);
    Tensor loss = objective == ReconObjective::Features
                      ? mse_loss(fwd.x_rec, g.node_features)
                      : adjacency_loss(fwd, a_dense);
    backward(loss);
    opt.step(params);

    double l = loss.value()(0, 0);
    result.loss_history.push_back(l);
    result.epochs_run = epoch;
    if (l < state.best_loss) {
      state.best_loss = l;
      state.best_epoch = epoch;
      state.patience_counter = 0;
      best = snapshot(params);
    } else {
      state.patience_counter += 1;
      if (state.patience_counter >= cfg.patience) break;
    }
  }

  restore(params, best);
  result.best_train_loss = state.best_loss;
  result.errors = compute_errors(model, g, adj, /*require_assignment=*/false);
  {
    NoGradGuard ng;
    auto fwd = model.forward(g, adj);
    result.x_rec = fwd.x_rec.value();
    if (fwd.has_assignment) {
      result.assignment = fwd.c.value();
      result.has_assignment = true;
    }
  }
  return result;
}

ReconErrors reconstruct_adjacency_error(ReconModel& model, const Graph& g) {
  NormAdj adj = normalize_adjacency(g.n, g.edges);
  return compute_errors(model, g, adj, /*require_assignment=*/true);
}

}  // namespace gmt
