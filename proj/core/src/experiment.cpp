#include "aimc/experiment.hpp"

#include "aimc/analysis.hpp"
#include "aimc/optimizers.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

namespace aimc {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// substream ids below a repeat seed
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kDeviceStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kShuffleStream = 4;
constexpr std::uint64_t kVariationStream = 5;
// below the master seed
constexpr std::uint64_t kProblemStream = 1;

ResponseModel make_response(const DeviceSpec& d) {
  if (d.response == "linear") return ResponseModel::generic_linear(d.tau, d.c_lin);
  if (d.response == "power") return ResponseModel::power(d.tau, d.gamma_res);
  if (d.response == "exponential") return ResponseModel::exponential(d.tau, d.gamma_res);
  return ResponseModel::load_csv(d.response_csv);
}

AnalogArray make_array(const DeviceSpec& d, Eigen::Index rows, Eigen::Index cols, double read_noise, Rng& var_rng) {
  const PulseConfig pulse{d.delta_w_min, d.max_bl, d.sigma_c};
  const UpdateBackend backend = d.backend == "pulse_train" ? UpdateBackend::PulseTrain : UpdateBackend::ClosedForm;
  const ResponseModel base = make_response(d);
  if (d.variation > 0.0) {
    return AnalogArray(rows, cols, with_element_variation(base, d.variation, rows, cols, var_rng), pulse, backend,
                       read_noise);
  }
  return AnalogArray(rows, cols, base, pulse, backend, read_noise);
}

std::unique_ptr<Optimizer> make_optimizer(const ExperimentConfig& cfg, const Matrix& initial, Rng& var_rng) {
  const auto& o = cfg.optimizer;
  const auto& d = cfg.device;
  const SgdConfig sgd{o.alpha, o.alpha_decay};
  if (o.algorithm == "dsgd") return std::make_unique<DigitalSgd>(initial, sgd);

  AnalogArray main = make_array(d, initial.rows(), initial.cols(), 0.0, var_rng);
  main.set_weights(initial);
  if (o.algorithm == "asgd") return std::make_unique<AnalogSgd>(std::move(main), sgd);

  AnalogArray residual = make_array(d, initial.rows(), initial.cols(), d.read_noise, var_rng);
  ResidualConfig rc;
  rc.alpha = o.alpha;
  rc.beta = o.beta;
  rc.gamma = o.gamma;
  // 0 transfers every column each step
  rc.transfer_columns = o.transfer_columns > 0 ? o.transfer_columns : static_cast<int>(initial.cols());
  rc.variant = o.algorithm == "rl" ? ResidualVariant::RL
               : o.algorithm == "rlv2" ? ResidualVariant::RLv2
                                       : ResidualVariant::TTv2;
  if (o.transfer_threshold > 0.0) rc.transfer_threshold = o.transfer_threshold;
  rc.noisy_mixing_read = o.noisy_mixing_read;
  rc.buffer_clip = o.buffer_clip;
  rc.zero_shift_residual = d.zero_shift;
  return std::make_unique<ResidualLearning>(std::move(main), std::move(residual), rc);
}

std::int64_t log_interval(const RunSpec& r, std::int64_t iterations) {
  return r.log_every > 0 ? r.log_every : std::max<std::int64_t>(1, iterations / 1000);
}

std::int64_t tail_length(const RunSpec& r, std::int64_t iterations) {
  const auto n = static_cast<std::int64_t>(std::ceil(r.tail_fraction * static_cast<double>(iterations)));
  return std::clamp<std::int64_t>(n, 1, iterations);
}

Matrix as_layout(const Vector& v, const std::string& layout) {
  return layout == "row" ? Matrix(v.transpose()) : Matrix(v);
}

std::unique_ptr<StochasticObjective> make_objective(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  GradientNoise noise;
  noise.mode = p.noise == "subsample" ? NoiseMode::Subsample
               : p.noise == "additive" ? NoiseMode::Additive
                                       : NoiseMode::None;
  noise.sigma = p.noise_sigma;
  noise.batch_size = p.batch_size;
  if (p.kind == "least_squares") {
    const std::uint64_t seed = p.seed.value_or(derive_seed(cfg.run.seed, kProblemStream));
    return std::make_unique<LeastSquares>(
        make_least_squares(p.dim, p.out_dim, p.sigma_a, p.sigma_w_star, seed, noise));
  }
  const Vector h = Eigen::Map<const Vector>(p.curvature.data(), static_cast<Eigen::Index>(p.curvature.size()));
  const Vector c = Eigen::Map<const Vector>(p.center.data(), static_cast<Eigen::Index>(p.center.size()));
  return std::make_unique<DiagonalQuadratic>(h, c, noise.mode == NoiseMode::None ? 0.0 : p.noise_sigma);
}

// Weights of the main array as an algorithm sees them (W, not the mixed W_bar).
Matrix main_weights(const Optimizer& opt) {
  if (const AnalogArray* a = opt.main_array()) return a->logical();
  return opt.weights();
}

RunResult run_objective(const ExperimentConfig& cfg, std::uint64_t rseed) {
  const auto problem = make_objective(cfg);
  const QuadraticModel quad = problem->quadratic_model();
  const Matrix w_star = as_layout(quad.minimizer, cfg.problem.layout);
  const Matrix initial = Matrix::Zero(w_star.rows(), w_star.cols());

  Rng noise_rng(derive_seed(rseed, kNoiseStream));
  Rng dev_rng(derive_seed(rseed, kDeviceStream));
  Rng var_rng(derive_seed(rseed, kVariationStream));
  auto opt = make_optimizer(cfg, initial, var_rng);
  const auto* rl = dynamic_cast<const ResidualLearning*>(opt.get());
  const double gamma = cfg.optimizer.gamma;

  const std::int64_t iterations = cfg.run.iterations;
  const std::int64_t every = log_interval(cfg.run, iterations);
  const std::int64_t tail_start = iterations - tail_length(cfg.run, iterations);

  RunResult res;
  MetricsAccumulator acc;
  double tail_loss = 0.0, tail_grad = 0.0, tail_dist = 0.0, tail_weighted = 0.0;
  double min_weighted = std::numeric_limits<double>::infinity();
  Matrix tail_w = Matrix::Zero(w_star.rows(), w_star.cols());
  std::int64_t tail_n = 0;

  auto observe = [&](std::int64_t k, bool log_row) {
    const Matrix w_bar = opt->weights();
    const Matrix g_bar = problem->full_gradient(w_bar);
    const Matrix w = main_weights(*opt);
    const bool mixed = rl && rl->config().variant != ResidualVariant::TTv2 && gamma > 0.0;
    const Matrix g = mixed ? problem->full_gradient(w) : g_bar;

    MetricsRow row;
    row.iteration = k;
    row.loss = problem->loss(w_bar);
    row.grad_norm_sq = g_bar.squaredNorm();
    row.dist_to_opt_sq = (w_bar - w_star).squaredNorm();
    row.p_residual_sq = kNaN;
    row.s_amp_w = opt->main_array() ? amplification_factor(*opt->main_array()) : 0.0;
    row.s_amp_p = kNaN;
    if (rl) {
      row.s_amp_p = amplification_factor((*rl->residual_array()));
      if (gamma > 0.0) row.p_residual_sq = ((*rl->residual_array()).logical() - residual_target(w, w_star, gamma)).squaredNorm();
    }
    row.weighted_grad_norm_sq =
        opt->main_array() ? weighted_squared_norm(g, saturation(*opt->main_array())) : g.squaredNorm();

    if (k < iterations) {
      MetricsAccumulator::Sample s;
      s.grad_norm_sq = g.squaredNorm();
      s.mixed_grad_norm_sq = row.grad_norm_sq;
      s.residual_gap_sq = std::isnan(row.p_residual_sq) ? 0.0 : row.p_residual_sq;
      s.dist_sq = (w - w_star).squaredNorm();
      s.amp_main = row.s_amp_w;
      s.amp_residual = std::isnan(row.s_amp_p) ? 0.0 : row.s_amp_p;
      acc.add(s);
    }
    min_weighted = std::min(min_weighted, row.weighted_grad_norm_sq);
    if (k > tail_start) {
      tail_loss += row.loss;
      tail_grad += row.grad_norm_sq;
      tail_dist += row.dist_to_opt_sq;
      tail_weighted += row.weighted_grad_norm_sq;
      tail_w += w_bar;
      ++tail_n;
    }
    if (log_row) res.rows.push_back(row);
    return row;
  };

  // E_K averages over k = 0 .. K-1, so the starting point is part of it
  observe(0, true);
  MetricsRow last;
  for (std::int64_t k = 1; k <= iterations; ++k) {
    const Matrix& at = opt->prepare(dev_rng);
    const Matrix grad = problem->stochastic_gradient(at, noise_rng);
    opt->apply_gradient(grad, dev_rng);
    const bool log_row = k % every == 0 || k == iterations;
    last = observe(k, log_row);
  }

  auto& v = res.values;
  v["iterations"] = static_cast<double>(iterations);
  v["final_loss"] = last.loss;
  v["final_grad_norm_sq"] = last.grad_norm_sq;
  v["final_dist_sq"] = last.dist_to_opt_sq;
  v["final_p_residual_sq"] = last.p_residual_sq;
  v["final_weighted_grad_norm_sq"] = last.weighted_grad_norm_sq;
  v["min_weighted_grad_norm_sq"] = min_weighted;
  v["tail_loss"] = tail_loss / static_cast<double>(tail_n);
  v["tail_grad_norm_sq"] = tail_grad / static_cast<double>(tail_n);
  v["tail_dist_sq"] = tail_dist / static_cast<double>(tail_n);
  v["tail_weighted_grad_norm_sq"] = tail_weighted / static_cast<double>(tail_n);
  v["e_asgd"] = acc.e_asgd();
  v["e_rl"] = acc.e_rl();
  v["s_asgd"] = acc.s_asgd();
  v["s_rl"] = acc.s_rl();
  v["pulses_fired"] = opt->main_array() ? static_cast<double>(opt->main_array()->fired_pulses()) : 0.0;
  v["buffer_decrements"] = rl ? static_cast<double>(rl->buffer_decrements()) : 0.0;
  res.tail_mean_weights = tail_w / static_cast<double>(tail_n);
  return res;
}

RunResult run_mnist(const ExperimentConfig& cfg, std::uint64_t rseed, const SharedData& shared) {
  const SharedData data = shared.train && shared.test ? shared : load_shared_data(cfg);
  const auto& p = cfg.problem;
  const MnistDataset& train = *data.train;
  if (p.layers.front() != train.images.rows()) {
    throw Error(ErrorKind::ConfigError, "problem.layers: input size " + std::to_string(p.layers.front()) +
                                            " does not match " + std::to_string(train.images.rows()) + " pixels");
  }
  const Eigen::Index n = train.size();
  const int batch = p.batch_size;
  if (n < batch) throw Error(ErrorKind::ConfigError, "problem.batch_size: larger than the training set");

  FcnClassifier net(p.layers);
  Rng init_rng(derive_seed(rseed, kInitStream));
  Rng dev_rng(derive_seed(rseed, kDeviceStream));
  Rng var_rng(derive_seed(rseed, kVariationStream));
  Rng shuffle_rng(derive_seed(rseed, kShuffleStream));

  const auto init = net.random_parameters(init_rng, p.init_scale);
  std::vector<std::unique_ptr<Optimizer>> opts;
  for (const auto& w : init) opts.push_back(make_optimizer(cfg, w, var_rng));

  const std::int64_t steps_per_epoch = n / batch;
  const std::int64_t iterations = cfg.run.epochs > 0 ? cfg.run.epochs * steps_per_epoch : cfg.run.iterations;
  const std::int64_t every = log_interval(cfg.run, iterations);
  const std::int64_t tail_start = iterations - tail_length(cfg.run, iterations);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix x(train.images.rows(), batch);
  std::vector<int> y(static_cast<std::size_t>(batch));
  std::vector<Matrix> at(opts.size());

  RunResult res;
  double tail_loss = 0.0;
  std::int64_t tail_n = 0;
  double last_loss = kNaN, last_grad = kNaN;
  for (std::int64_t k = 0; k < iterations; ++k) {
    const std::int64_t slot = k % steps_per_epoch;
    if (slot == 0) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index idx = order[static_cast<std::size_t>(slot * batch + b)];
      x.col(b) = train.images.col(idx);
      y[static_cast<std::size_t>(b)] = train.labels[static_cast<std::size_t>(idx)];
    }
    for (std::size_t l = 0; l < opts.size(); ++l) at[l] = opts[l]->prepare(dev_rng);
    const auto ev = net.forward_backward(at, x, y);
    double gn = 0.0;
    for (std::size_t l = 0; l < opts.size(); ++l) {
      gn += ev.gradients[l].squaredNorm();
      opts[l]->apply_gradient(ev.gradients[l], dev_rng);
    }
    last_loss = ev.loss;
    last_grad = gn;
    if (k >= tail_start) {
      tail_loss += ev.loss;
      ++tail_n;
    }
    if ((k + 1) % every == 0 || k + 1 == iterations) {
      MetricsRow row;
      row.iteration = k + 1;
      row.loss = ev.loss;
      row.grad_norm_sq = gn;
      row.dist_to_opt_sq = kNaN;
      row.p_residual_sq = kNaN;
      row.s_amp_w = 0.0;
      row.s_amp_p = kNaN;
      for (const auto& o : opts) {
        if (o->main_array()) row.s_amp_w = std::max(row.s_amp_w, amplification_factor(*o->main_array()));
        if (o->residual_array()) {
          const double a = amplification_factor(*o->residual_array());
          row.s_amp_p = std::isnan(row.s_amp_p) ? a : std::max(row.s_amp_p, a);
        }
      }
      row.weighted_grad_norm_sq = kNaN;
      res.rows.push_back(row);
    }
  }

  std::vector<Matrix> final_w;
  for (const auto& o : opts) final_w.push_back(o->weights());
  auto& v = res.values;
  v["iterations"] = static_cast<double>(iterations);
  v["final_loss"] = last_loss;
  v["final_grad_norm_sq"] = last_grad;
  v["tail_loss"] = tail_n ? tail_loss / static_cast<double>(tail_n) : kNaN;
  v["test_accuracy"] = net.accuracy(final_w, *data.test);
  v["train_accuracy"] = net.accuracy(final_w, train);
  double pulses = 0.0;
  for (const auto& o : opts)
    if (o->main_array()) pulses += static_cast<double>(o->main_array()->fired_pulses());
  v["pulses_fired"] = pulses;
  return res;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

fs::path point_dir(const fs::path& out, std::size_t point) {
  char name[32];
  std::snprintf(name, sizeof name, "point_%03zu", point);
  return out / name;
}

nlohmann::json number(double x) {
  // JSON has no NaN; keep the slot with null
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {"iteration",     "loss",    "grad_norm_sq", "dist_to_opt_sq",
                                                "p_residual_sq", "s_amp_w", "s_amp_p",      "weighted_grad_norm_sq"};
  return cols;
}

double RunResult::at(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw Error(ErrorKind::InvalidArgument, "run has no value named " + key);
  return it->second;
}

double PointSummary::mean(const std::string& key) const {
  if (runs.empty()) throw Error(ErrorKind::InvalidArgument, "no runs to summarize");
  double s = 0.0;
  for (const auto& r : runs) s += r.at(key);
  return s / static_cast<double>(runs.size());
}

double PointSummary::stddev(const std::string& key) const {
  if (runs.size() < 2) return 0.0;
  const double m = mean(key);
  double s = 0.0;
  for (const auto& r : runs) s += (r.at(key) - m) * (r.at(key) - m);
  return std::sqrt(s / static_cast<double>(runs.size() - 1));
}

SharedData load_shared_data(const ExperimentConfig& cfg) {
  SharedData d;
  if (cfg.problem.kind != "mnist") return d;
  const fs::path dir = cfg.problem.data_dir;
  d.train = std::make_shared<const MnistDataset>(load_mnist_idx((dir / "train-images-idx3-ubyte").string(),
                                                                (dir / "train-labels-idx1-ubyte").string(),
                                                                cfg.problem.train_limit));
  d.test = std::make_shared<const MnistDataset>(load_mnist_idx((dir / "t10k-images-idx3-ubyte").string(),
                                                               (dir / "t10k-labels-idx1-ubyte").string(),
                                                               cfg.problem.test_limit));
  return d;
}

std::uint64_t repeat_seed(std::uint64_t master, int repeat) {
  return derive_seed(master, 1000 + static_cast<std::uint64_t>(repeat));
}

RunResult run_single(const ExperimentConfig& cfg, int repeat, const SharedData& data) {
  cfg.validate();
  if (!cfg.sweep.empty()) throw Error(ErrorKind::ConfigError, "sweep: run_single needs an expanded point");
  const std::uint64_t rseed = repeat_seed(cfg.run.seed, repeat);
  RunResult res = cfg.problem.kind == "mnist" ? run_mnist(cfg, rseed, data) : run_objective(cfg, rseed);
  res.repeat = repeat;
  res.seed = rseed;
  return res;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::string text;
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) text += (i ? "," : "") + cols[i];
  text += "\n";
  for (const auto& r : rows) {
    text += std::to_string(r.iteration) + "," + fmt(r.loss) + "," + fmt(r.grad_norm_sq) + "," +
            fmt(r.dist_to_opt_sq) + "," + fmt(r.p_residual_sq) + "," + fmt(r.s_amp_w) + "," + fmt(r.s_amp_p) +
            "," + fmt(r.weighted_grad_norm_sq) + "\n";
  }
  write_text(path, text);
}

std::string summary_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = result.name;
  j["seed"] = result.seed;
  j["columns"] = metrics_columns();
  j["points"] = nlohmann::json::array();
  for (const auto& pt : result.points) {
    nlohmann::json p;
    p["index"] = pt.point.index;
    p["label"] = pt.point.label();
    p["overrides"] = nlohmann::json::object();
    for (const auto& [k, v] : pt.point.overrides) p["overrides"][k] = v;
    p["repeats"] = pt.runs.size();
    nlohmann::json summary = nlohmann::json::object();
    if (!pt.runs.empty()) {
      for (const auto& [key, value] : pt.runs.front().values) {
        summary[key] = {{"mean", number(pt.mean(key))}, {"std", number(pt.stddev(key))}};
      }
    }
    p["summary"] = summary;
    p["runs"] = nlohmann::json::array();
    for (const auto& r : pt.runs) {
      nlohmann::json rj;
      rj["repeat"] = r.repeat;
      rj["seed"] = r.seed;
      for (const auto& [key, value] : r.values) rj["values"][key] = number(value);
      p["runs"].push_back(rj);
    }
    j["points"].push_back(p);
  }
  return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const auto points = expand_sweep(cfg);
  const SharedData data = load_shared_data(cfg);
  const int repeats = cfg.run.repeats;

  ExperimentResult result;
  result.name = cfg.name;
  result.seed = cfg.run.seed;
  for (const auto& pt : points) {
    PointSummary s;
    s.point = pt;
    s.runs.resize(static_cast<std::size_t>(repeats));
    result.points.push_back(std::move(s));
  }

  const fs::path out = out_dir;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + out.string() + ": " + ec.message());
    write_text(out / "config.txt", to_text(cfg));
    for (const auto& pt : points) {
      fs::create_directories(point_dir(out, pt.index), ec);
      if (ec) throw Error(ErrorKind::IoError, "cannot create " + point_dir(out, pt.index).string());
      write_text(point_dir(out, pt.index) / "config.txt", to_text(pt.config));
    }
  }

  const std::size_t jobs = points.size() * static_cast<std::size_t>(repeats);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t pi = job / static_cast<std::size_t>(repeats);
      const int r = static_cast<int>(job % static_cast<std::size_t>(repeats));
      try {
        RunResult res = run_single(points[pi].config, r, data);
        res.point = pi;
        if (!out_dir.empty() && cfg.run.write_metrics) {
          const fs::path dir = point_dir(out, pi) / ("repeat_" + std::to_string(r));
          fs::create_directories(dir);
          write_metrics_csv(res.rows, (dir / "metrics.csv").string());
        }
        result.points[pi].runs[static_cast<std::size_t>(r)] = std::move(res);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };

  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(cfg.run.threads), jobs);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (!out_dir.empty()) write_text(out / "summary.json", summary_json(result));
  return result;
}

}  // namespace aimc
