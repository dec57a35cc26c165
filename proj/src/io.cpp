#include "gmt/io.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmt {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.precision(12);
  return out;
}

std::string git_describe() {
  std::array<char, 256> buf{};
  std::string rev = "unknown";
  FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
  if (pipe) {
    if (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) {
      rev = buf.data();
      while (!rev.empty() && (rev.back() == '\n' || rev.back() == '\r'))
        rev.pop_back();
    }
    pclose(pipe);
  }
  return rev.empty() ? "unknown" : rev;
}

}  // namespace

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::string& path) {
  auto out = open_out(path);
  out << "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& m : history)
    out << m.epoch << "," << m.train_loss << "," << m.val_loss << ","
        << m.val_acc << "\n";
}

void write_recon_csv(const Matrix& x_true, const Matrix& x_rec,
                     const std::string& path) {
  if (x_true.rows() != x_rec.rows() || x_true.cols() < 2 || x_rec.cols() < 2)
    throw std::invalid_argument("write_recon_csv: shape mismatch");
  auto out = open_out(path);
  out << "node_id,x_true,y_true,x_rec,y_rec\n";
  for (Eigen::Index i = 0; i < x_true.rows(); ++i)
    out << i << "," << x_true(i, 0) << "," << x_true(i, 1) << ","
        << x_rec(i, 0) << "," << x_rec(i, 1) << "\n";
}

void write_recon_svg(const Graph& g, const Matrix& x_rec,
                     const std::string& path) {
  if (g.node_features.cols() < 2 || x_rec.cols() < 2)
    throw std::invalid_argument("write_recon_svg: need 2-d coordinates");
  const Matrix& xt = g.node_features;
  double lo_x = std::min(xt.col(0).minCoeff(), x_rec.col(0).minCoeff());
  double hi_x = std::max(xt.col(0).maxCoeff(), x_rec.col(0).maxCoeff());
  double lo_y = std::min(xt.col(1).minCoeff(), x_rec.col(1).minCoeff());
  double hi_y = std::max(xt.col(1).maxCoeff(), x_rec.col(1).maxCoeff());
  double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double size = 600.0, margin = 40.0;
  auto px = [&](double x) { return margin + (x - lo_x) / span * (size - 2 * margin); };
  // svg y grows downward
  auto py = [&](double y) { return size - margin - (y - lo_y) / span * (size - 2 * margin); };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << " " << size
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& [u, v] : g.edges)
    out << "<line x1=\"" << px(xt(u, 0)) << "\" y1=\"" << py(xt(u, 1))
        << "\" x2=\"" << px(xt(v, 0)) << "\" y2=\"" << py(xt(v, 1))
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
  for (Eigen::Index i = 0; i < xt.rows(); ++i)
    out << "<circle cx=\"" << px(xt(i, 0)) << "\" cy=\"" << py(xt(i, 1))
        << "\" r=\"4\" fill=\"#999999\"/>\n";
  for (Eigen::Index i = 0; i < x_rec.rows(); ++i)
    out << "<circle cx=\"" << px(x_rec(i, 0)) << "\" cy=\"" << py(x_rec(i, 1))
        << "\" r=\"3\" fill=\"#d62728\"/>\n";
  out << "</svg>\n";
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

void write_fold_csv(const std::vector<FoldResult>& folds,
                    const std::string& path) {
  auto out = open_out(path);
  out << "fold,seed,test_accuracy,best_val_loss,best_epoch\n";
  std::vector<double> accs;
  for (const auto& f : folds) {
    out << f.fold << "," << f.seed << "," << f.test_accuracy << ","
        << f.best_val_loss << "," << f.best_epoch << "\n";
    accs.push_back(f.test_accuracy);
  }
  out << "mean,," << mean_of(accs) << ",,\n";
  out << "std,," << stddev_of(accs) << ",,\n";
}

void write_run_provenance(const RunConfig& cfg, const std::string& dir) {
  nlohmann::json j;
  j["config"] = nlohmann::json::object();
  // flat key=value view, same keys as the config file format
  std::istringstream ss(serialize_config(cfg));
  std::string line;
  while (std::getline(ss, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq - 1);
    std::string val = line.substr(eq + 2);
    j["config"][key] = val;
  }
  j["seed"] = cfg.seed;
  j["revision"] = git_describe();
  auto out = open_out(dir + "/run.json");
  out << j.dump(2) << "\n";
}

}  // namespace gmt
