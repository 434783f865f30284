#include "aimc/presets.hpp"

#include <algorithm>

namespace aimc {

namespace {

struct Preset {
  const char* name;
  const char* description;
  const char* text;
};

// Least-squares defaults shared by most presets: D = 50, D_out = 100,
// A ~ N(0, 1), W* ~ N(0, 0.25), fixed problem seed.
const Preset kPresets[] = {
    {"fig2_counterexample",
     "RL vs analog SGD on least squares for c_lin in {0, 0.1, 0.2, 0.3}",
     R"(schema_version = 1
name = fig2_counterexample
problem.kind = least_squares
problem.seed = 1234
problem.noise = subsample
problem.batch_size = 2
device.response = linear
device.tau = 3.5
device.delta_w_min = 1e-4
device.max_bl = 8
device.backend = pulse_train
optimizer.alpha = 1e-4
optimizer.beta = 0.05
optimizer.gamma = 0.4
run.iterations = 2e5
run.tail_fraction = 0.1
sweep.device.c_lin = 0, 0.1, 0.2, 0.3
sweep.optimizer.algorithm = asgd, rl
)"},

    {"implicit_penalty_scalar",
     "analog SGD on a scalar quadratic; tail average vs the penalized stationary point",
     R"(schema_version = 1
name = implicit_penalty_scalar
problem.kind = quadratic
problem.curvature = 1
problem.center = 1
problem.layout = column
problem.noise = additive
problem.noise_sigma = 0.5
device.response = linear
device.tau = 2
device.backend = closed_form
optimizer.algorithm = asgd
optimizer.alpha = 1e-3
run.iterations = 5e5
run.tail_fraction = 0.8
)"},

    {"asgd_plateau_scaling",
     "analog SGD plateau vs gradient noise level, with decaying-step digital SGD as reference",
     R"(schema_version = 1
name = asgd_plateau_scaling
problem.kind = least_squares
problem.seed = 1234
problem.noise = additive
device.response = linear
device.tau = 3.5
device.backend = closed_form
optimizer.alpha = 1e-3
run.iterations = 1e5
run.tail_fraction = 0.2
sweep.problem.noise_sigma = 0.1, 0.2, 0.4
zip.optimizer.algorithm = asgd, dsgd
zip.optimizer.alpha_decay = 0, 0.01
)"},

    {"rl_exact_convergence",
     "RL with a power response (symmetric point 0) under subsampling noise, E_K vs K",
     R"(schema_version = 1
name = rl_exact_convergence
problem.kind = least_squares
problem.seed = 1234
problem.noise = subsample
problem.batch_size = 10
device.response = power
device.tau = 3
device.gamma_res = 0.5
device.backend = closed_form
optimizer.algorithm = rl
optimizer.alpha = 1e-3
optimizer.beta = 0.1
optimizer.gamma = 0.4
sweep.run.iterations = 1000, 4000, 16000
)"},

    {"rlv2_noise_filter",
     "RL vs RLv2 with noisy residual reads during transfer",
     R"(schema_version = 1
name = rlv2_noise_filter
problem.kind = least_squares
problem.seed = 1234
problem.noise = additive
problem.noise_sigma = 0.1
device.response = linear
device.tau = 3.5
device.delta_w_min = 1e-3
device.max_bl = 32
device.backend = pulse_train
device.read_noise = 0.06
optimizer.alpha = 1e-3
optimizer.beta = 0.1
optimizer.gamma = 0.4
optimizer.noisy_mixing_read = false
run.iterations = 1e5
run.tail_fraction = 0.1
sweep.optimizer.algorithm = rl, rlv2
)"},

    {"granularity_plateau",
     "analog SGD with exact gradients and pulse updates for dw_min in {1e-3, 1e-4, 1e-5}",
     R"(schema_version = 1
name = granularity_plateau
problem.kind = least_squares
problem.seed = 1234
problem.noise = none
device.response = linear
device.tau = 3.5
device.backend = pulse_train
device.max_bl = 32
optimizer.algorithm = asgd
optimizer.alpha = 1e-3
run.iterations = 2e4
run.tail_fraction = 0.2
sweep.device.delta_w_min = 1e-3, 1e-4, 1e-5
)"},

    {"cycle_variation_ablation",
     "RL with pulse updates under cycle-to-cycle variation sigma_c in {0.1, 0.6, 1.2}",
     R"(schema_version = 1
name = cycle_variation_ablation
problem.kind = least_squares
problem.seed = 1234
problem.noise = additive
problem.noise_sigma = 0.1
device.response = linear
device.tau = 3.5
device.delta_w_min = 1e-4
device.max_bl = 32
device.backend = pulse_train
optimizer.algorithm = rl
optimizer.alpha = 1e-3
optimizer.beta = 0.1
optimizer.gamma = 0.4
run.iterations = 1e5
run.tail_fraction = 0.1
sweep.device.sigma_c = 0.1, 0.6, 1.2
)"},

    {"analog_gd_noiseless",
     "full-batch analog SGD, power response with wide range (saturation bounded away from 0)",
     R"(schema_version = 1
name = analog_gd_noiseless
problem.kind = least_squares
problem.seed = 1234
problem.noise = none
device.response = power
device.tau = 10
device.gamma_res = 0.5
device.backend = closed_form
optimizer.algorithm = asgd
optimizer.alpha = 1e-3
run.iterations = 1e5
)"},

    {"mnist_fcn_reduced",
     "784-256-128-10 sigmoid network on the bundled MNIST subset: digital SGD, analog SGD, RL",
     R"(schema_version = 1
name = mnist_fcn_reduced
problem.kind = mnist
problem.data_dir = data/mnist
problem.layers = 784, 256, 128, 10
problem.batch_size = 10
problem.init_scale = 0.3
device.response = power
device.tau = 0.6
device.gamma_res = 0.5
device.delta_w_min = 1e-3
device.max_bl = 32
device.backend = closed_form
optimizer.alpha = 0.05
optimizer.beta = 0.01
optimizer.gamma = 0.4
optimizer.transfer_columns = 0
run.epochs = 2
run.log_every = 10
zip.optimizer.algorithm = dsgd, asgd, rl
zip.optimizer.alpha = 0.1, 0.05, 0.05
)"},
};

const Preset& find(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return p;
  throw Error(ErrorKind::UnknownPreset, "'" + name + "' (see list-presets)");
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

std::string preset_description(const std::string& name) { return find(name).description; }

std::string preset_text(const std::string& name) { return find(name).text; }

ExperimentConfig preset(const std::string& name) { return parse_config(find(name).text); }

}  // namespace aimc
