#pragma once

#include "aimc/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

inline constexpr int kConfigSchemaVersion = 1;

struct ProblemSpec {
  std::string kind = "least_squares";  // least_squares | quadratic | mnist
  // least squares
  int dim = 50;
  int out_dim = 100;
  double sigma_a = 1.0;
  double sigma_w_star = 0.5;
  std::optional<std::uint64_t> seed;  // fixed instance seed; derived from run.seed when absent
  std::string layout = "row";         // row: 1 x D tile, column: D x 1
  // gradient noise (least squares, quadratic)
  std::string noise = "additive";     // none | subsample | additive
  double noise_sigma = 0.1;
  int batch_size = 10;                // subsample rows, or MNIST minibatch
  // diagonal quadratic
  std::vector<double> curvature{1.0};
  std::vector<double> center{1.0};
  // mnist
  std::string data_dir = "data/mnist";
  int train_limit = 0;
  int test_limit = 0;
  std::vector<int> layers{784, 256, 128, 10};
  double init_scale = 0.3;
};

struct DeviceSpec {
  std::string response = "linear";  // linear | power | exponential | tabulated
  std::string response_csv;         // tabulated only
  double tau = 1.0;
  double c_lin = 0.0;
  double gamma_res = 1.0;
  double delta_w_min = 1e-3;
  int max_bl = 32;
  double sigma_c = 0.0;
  std::string backend = "closed_form";  // closed_form | pulse_train
  double read_noise = 0.0;              // on residual-array reads
  double variation = 0.0;               // element-to-element spread of tau / gamma_res
  bool zero_shift = false;              // residual array starts at its symmetric point
};

struct OptimizerSpec {
  std::string algorithm = "asgd";  // dsgd | asgd | rl | rlv2 | ttv2
  double alpha = 0.05;
  double alpha_decay = 0.0;
  double beta = 0.01;
  double gamma = 0.4;
  int transfer_columns = 1;         // per step; 0 transfers all columns
  double transfer_threshold = 0.0;  // 0 selects the main array's dw_min
  bool noisy_mixing_read = true;
  double buffer_clip = 1.0;
};

struct RunSpec {
  std::int64_t iterations = 200000;
  int epochs = 0;             // mnist: overrides iterations when > 0
  std::int64_t log_every = 0;  // 0: max(1, iterations / 1000)
  std::uint64_t seed = 0;
  int repeats = 1;
  int threads = 1;
  double tail_fraction = 0.1;
  bool write_metrics = true;
};

/// One sweep axis. Keys of a zipped axis advance together.
struct SweepAxis {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> values;  // values[key][point]
  std::size_t size() const { return values.empty() ? 0 : values.front().size(); }
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "custom";
  ProblemSpec problem;
  DeviceSpec device;
  OptimizerSpec optimizer;
  RunSpec run;
  std::vector<SweepAxis> sweep;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Sets one dotted field from text. Throws ConfigError naming the field.
void set_field(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_field(const ExperimentConfig& cfg, const std::string& key);
const std::vector<std::string>& config_keys();

/// "key=value" override, as given on the command line.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Key-value text: `key = value` per line, '#' comments, `schema_version = 1`
/// required. `sweep.<key> = a, b, c` adds a cartesian axis; all
/// `zip.<key>` lines form one extra axis whose keys advance together.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string to_text(const ExperimentConfig& cfg);

/// A concrete point of the sweep: the overrides applied and the resulting config.
struct SweepPoint {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> overrides;
  ExperimentConfig config;
  std::string label() const;
};

/// Cartesian product of the axes in declaration order (last axis fastest).
std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg);

}  // namespace aimc
