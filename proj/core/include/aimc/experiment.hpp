#pragma once

#include "aimc/config.hpp"
#include "aimc/problems.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

/// Column order of every metrics.csv.
const std::vector<std::string>& metrics_columns();

struct MetricsRow {
  std::int64_t iteration = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  double dist_to_opt_sq = 0.0;   // NaN when the optimum is unknown
  double p_residual_sq = 0.0;    // ||P - (W* - W) / gamma||^2, NaN without a residual array
  double s_amp_w = 0.0;
  double s_amp_p = 0.0;          // NaN without a residual array
  double weighted_grad_norm_sq = 0.0;  // ||grad f(W)||^2 weighted by q+ q- of W
};

/// Scalar outcomes of one seeded run, keyed by name (see README for the list).
struct RunResult {
  std::size_t point = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> values;
  std::vector<MetricsRow> rows;
  Matrix tail_mean_weights;  // time average of the evaluated weights over the tail window

  double at(const std::string& key) const;
};

struct PointSummary {
  SweepPoint point;
  std::vector<RunResult> runs;
  double mean(const std::string& key) const;
  double stddev(const std::string& key) const;  // sample std, 0 for a single run
};

struct ExperimentResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<PointSummary> points;
};

/// Read-only data shared between runs (MNIST images are loaded once).
struct SharedData {
  std::shared_ptr<const MnistDataset> train;
  std::shared_ptr<const MnistDataset> test;
};

SharedData load_shared_data(const ExperimentConfig& cfg);

/// Seed of repeat r: derive_seed(master, 1000 + r), shared by all sweep points
/// so that compared algorithms see the same noise stream.
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

/// One seeded run of a single (already expanded) point.
RunResult run_single(const ExperimentConfig& cfg, int repeat, const SharedData& data = {});

/// Every sweep point times run.repeats. Writes
///   <out>/config.txt, <out>/summary.json,
///   <out>/point_NNN/config.txt, <out>/point_NNN/repeat_R/metrics.csv
/// when `out_dir` is non-empty. Results are ordered by point, then repeat,
/// whatever run.threads is.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = {});

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::string summary_json(const ExperimentResult& result);

}  // namespace aimc
