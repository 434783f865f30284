#include "aimc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace aimc {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, key + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) fail(key, "expected a number, got '" + v + "'");
  return x;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  // accept 2e5 style integers
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9.0e15) fail(key, "expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::string to_choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    if (!list.empty()) list += ", ";
    list += a;
  }
  fail(key, "unknown value '" + v + "' (expected " + list + ")");
}

std::string fmt(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += fmt(xs[i]);
    else s += std::to_string(xs[i]);
  }
  return s;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define AIMC_DOUBLE(member) \
  Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.member); }}
#define AIMC_INT(member, type) \
  Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { \
          const auto x = to_int(k, v); \
          if (x < 0 && std::is_unsigned_v<type>) fail(k, "must be >= 0"); \
          c.member = static_cast<type>(x); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define AIMC_BOOL(member) \
  Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.member); }}
#define AIMC_STRING(member) \
  Field{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
        [](const ExperimentConfig& c) { return c.member; }}
#define AIMC_CHOICE(member, ...) \
  Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) { \
          c.member = to_choice(k, v, {__VA_ARGS__}); }, \
        [](const ExperimentConfig& c) { return c.member; }}

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"schema_version", AIMC_INT(schema_version, int)},
      {"name", AIMC_STRING(name)},

      {"problem.kind", AIMC_CHOICE(problem.kind, "least_squares", "quadratic", "mnist")},
      {"problem.dim", AIMC_INT(problem.dim, int)},
      {"problem.out_dim", AIMC_INT(problem.out_dim, int)},
      {"problem.sigma_a", AIMC_DOUBLE(problem.sigma_a)},
      {"problem.sigma_w_star", AIMC_DOUBLE(problem.sigma_w_star)},
      {"problem.seed",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               if (v == "auto" || v.empty()) {
                 c.problem.seed.reset();
                 return;
               }
               const auto x = to_int(k, v);
               if (x < 0) fail(k, "must be >= 0");
               c.problem.seed = static_cast<std::uint64_t>(x);
             },
             [](const ExperimentConfig& c) {
               return c.problem.seed ? std::to_string(*c.problem.seed) : std::string("auto");
             }}},
      {"problem.layout", AIMC_CHOICE(problem.layout, "row", "column")},
      {"problem.noise", AIMC_CHOICE(problem.noise, "none", "subsample", "additive")},
      {"problem.noise_sigma", AIMC_DOUBLE(problem.noise_sigma)},
      {"problem.batch_size", AIMC_INT(problem.batch_size, int)},
      {"problem.curvature",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               c.problem.curvature.clear();
               for (const auto& x : split_list(v)) c.problem.curvature.push_back(to_double(k, x));
             },
             [](const ExperimentConfig& c) { return fmt_list(c.problem.curvature); }}},
      {"problem.center",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               c.problem.center.clear();
               for (const auto& x : split_list(v)) c.problem.center.push_back(to_double(k, x));
             },
             [](const ExperimentConfig& c) { return fmt_list(c.problem.center); }}},
      {"problem.data_dir", AIMC_STRING(problem.data_dir)},
      {"problem.train_limit", AIMC_INT(problem.train_limit, int)},
      {"problem.test_limit", AIMC_INT(problem.test_limit, int)},
      {"problem.layers",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               c.problem.layers.clear();
               for (const auto& x : split_list(v)) c.problem.layers.push_back(static_cast<int>(to_int(k, x)));
             },
             [](const ExperimentConfig& c) { return fmt_list(c.problem.layers); }}},
      {"problem.init_scale", AIMC_DOUBLE(problem.init_scale)},

      {"device.response", AIMC_CHOICE(device.response, "linear", "power", "exponential", "tabulated")},
      {"device.response_csv", AIMC_STRING(device.response_csv)},
      {"device.tau", AIMC_DOUBLE(device.tau)},
      {"device.c_lin", AIMC_DOUBLE(device.c_lin)},
      {"device.gamma_res", AIMC_DOUBLE(device.gamma_res)},
      {"device.delta_w_min", AIMC_DOUBLE(device.delta_w_min)},
      {"device.max_bl", AIMC_INT(device.max_bl, int)},
      {"device.sigma_c", AIMC_DOUBLE(device.sigma_c)},
      {"device.backend", AIMC_CHOICE(device.backend, "closed_form", "pulse_train")},
      {"device.read_noise", AIMC_DOUBLE(device.read_noise)},
      {"device.variation", AIMC_DOUBLE(device.variation)},
      {"device.zero_shift", AIMC_BOOL(device.zero_shift)},

      {"optimizer.algorithm", AIMC_CHOICE(optimizer.algorithm, "dsgd", "asgd", "rl", "rlv2", "ttv2")},
      {"optimizer.alpha", AIMC_DOUBLE(optimizer.alpha)},
      {"optimizer.alpha_decay", AIMC_DOUBLE(optimizer.alpha_decay)},
      {"optimizer.beta", AIMC_DOUBLE(optimizer.beta)},
      {"optimizer.gamma", AIMC_DOUBLE(optimizer.gamma)},
      {"optimizer.transfer_columns", AIMC_INT(optimizer.transfer_columns, int)},
      {"optimizer.transfer_threshold", AIMC_DOUBLE(optimizer.transfer_threshold)},
      {"optimizer.noisy_mixing_read", AIMC_BOOL(optimizer.noisy_mixing_read)},
      {"optimizer.buffer_clip", AIMC_DOUBLE(optimizer.buffer_clip)},

      {"run.iterations", AIMC_INT(run.iterations, std::int64_t)},
      {"run.epochs", AIMC_INT(run.epochs, int)},
      {"run.log_every", AIMC_INT(run.log_every, std::int64_t)},
      {"run.seed", AIMC_INT(run.seed, std::uint64_t)},
      {"run.repeats", AIMC_INT(run.repeats, int)},
      {"run.threads", AIMC_INT(run.threads, int)},
      {"run.tail_fraction", AIMC_DOUBLE(run.tail_fraction)},
      {"run.write_metrics", AIMC_BOOL(run.write_metrics)},
  };
  return table;
}

#undef AIMC_DOUBLE
#undef AIMC_INT
#undef AIMC_BOOL
#undef AIMC_STRING
#undef AIMC_CHOICE

const Field& find_field(const std::string& key) {
  for (const auto& [k, f] : field_table())
    if (k == key) return f;
  fail(key, "unknown configuration key");
}

void check(bool ok, const char* key, const std::string& msg) {
  if (!ok) fail(key, msg);
}

void validate_point(const ExperimentConfig& c) {
  check(c.schema_version == kConfigSchemaVersion, "schema_version",
        "unsupported version " + std::to_string(c.schema_version));
  check(!c.name.empty(), "name", "must not be empty");

  const auto& p = c.problem;
  check(p.dim >= 1, "problem.dim", "must be >= 1");
  check(p.out_dim >= 1, "problem.out_dim", "must be >= 1");
  check(p.sigma_a > 0.0, "problem.sigma_a", "must be > 0");
  check(p.sigma_w_star >= 0.0, "problem.sigma_w_star", "must be >= 0");
  check(p.noise_sigma >= 0.0, "problem.noise_sigma", "must be >= 0");
  check(p.batch_size >= 1, "problem.batch_size", "must be >= 1");
  if (p.kind == "least_squares" && p.noise == "subsample") {
    check(p.batch_size <= p.out_dim, "problem.batch_size", "must not exceed problem.out_dim");
  }
  if (p.kind == "quadratic") {
    check(!p.curvature.empty(), "problem.curvature", "must not be empty");
    check(p.curvature.size() == p.center.size(), "problem.center", "must have as many entries as problem.curvature");
    for (double h : p.curvature) check(h > 0.0, "problem.curvature", "entries must be > 0");
    check(p.noise != "subsample", "problem.noise", "subsample needs a least-squares problem");
  }
  if (p.kind == "mnist") {
    check(p.layers.size() >= 2, "problem.layers", "needs at least input and output sizes");
    for (int n : p.layers) check(n >= 1, "problem.layers", "sizes must be >= 1");
    check(!p.data_dir.empty(), "problem.data_dir", "must not be empty");
  }
  check(p.train_limit >= 0, "problem.train_limit", "must be >= 0");
  check(p.test_limit >= 0, "problem.test_limit", "must be >= 0");
  check(p.init_scale > 0.0, "problem.init_scale", "must be > 0");

  const auto& d = c.device;
  check(d.tau > 0.0, "device.tau", "must be > 0");
  check(std::abs(d.c_lin) < 1.0, "device.c_lin", "must lie in (-1, 1)");
  if (d.response == "power" || d.response == "exponential") check(d.gamma_res > 0.0, "device.gamma_res", "must be > 0");
  if (d.response == "tabulated") check(!d.response_csv.empty(), "device.response_csv", "required for tabulated responses");
  check(d.delta_w_min > 0.0, "device.delta_w_min", "must be > 0");
  check(d.max_bl >= 1, "device.max_bl", "must be >= 1");
  check(d.sigma_c >= 0.0, "device.sigma_c", "must be >= 0");
  check(d.read_noise >= 0.0, "device.read_noise", "must be >= 0");
  check(d.variation >= 0.0 && d.variation < 1.0, "device.variation", "must lie in [0, 1)");

  const auto& o = c.optimizer;
  check(o.alpha > 0.0, "optimizer.alpha", "must be > 0");
  check(o.alpha_decay >= 0.0, "optimizer.alpha_decay", "must be >= 0");
  check(o.beta > 0.0, "optimizer.beta", "must be > 0");
  if (o.algorithm == "rlv2") check(o.beta <= 1.0, "optimizer.beta", "must be <= 1 for the moving-average buffer");
  check(o.gamma >= 0.0, "optimizer.gamma", "must be >= 0");
  check(o.transfer_columns >= 0, "optimizer.transfer_columns", "must be >= 0 (0: all columns)");
  check(o.transfer_threshold >= 0.0, "optimizer.transfer_threshold", "must be >= 0");
  check(o.buffer_clip > 0.0, "optimizer.buffer_clip", "must be > 0");

  const auto& r = c.run;
  check(r.epochs >= 0, "run.epochs", "must be >= 0");
  if (!(p.kind == "mnist" && r.epochs > 0)) check(r.iterations >= 1, "run.iterations", "must be >= 1");
  check(r.log_every >= 0, "run.log_every", "must be >= 0");
  check(r.repeats >= 1, "run.repeats", "must be >= 1");
  check(r.threads >= 1, "run.threads", "must be >= 1");
  check(r.tail_fraction > 0.0 && r.tail_fraction <= 1.0, "run.tail_fraction", "must lie in (0, 1]");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, f] : field_table()) k.push_back(key);
    return k;
  }();
  return keys;
}

void set_field(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, key, trim(value));
}

std::string get_field(const ExperimentConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(assignment, "override must look like key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.rfind("sweep.", 0) == 0 || key.rfind("zip.", 0) == 0) {
    fail(key, "sweeps can only be declared in a config file");
  }
  set_field(cfg, key, value);
  // an explicit override pins the field even when a sweep axis varies it
  for (auto& axis : cfg.sweep) {
    for (std::size_t i = 0; i < axis.keys.size(); ++i) {
      if (axis.keys[i] == key) {
        axis.keys.erase(axis.keys.begin() + static_cast<std::ptrdiff_t>(i));
        axis.values.erase(axis.values.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
  cfg.sweep.erase(std::remove_if(cfg.sweep.begin(), cfg.sweep.end(), [](const SweepAxis& a) { return a.keys.empty(); }),
                  cfg.sweep.end());
}

void ExperimentConfig::validate() const {
  validate_point(*this);
  for (const auto& axis : sweep) {
    for (std::size_t k = 0; k < axis.keys.size(); ++k) {
      if (axis.values[k].size() != axis.size()) fail("zip." + axis.keys[k], "zipped lists differ in length");
    }
  }
  for (const auto& point : expand_sweep(*this)) {
    try {
      validate_point(point.config);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string(e.what()).substr(13) + " (sweep point " + point.label() + ")");
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_version = false;
  std::optional<std::size_t> zip_axis;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value (line " + std::to_string(lineno) + ")");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key.rfind("sweep.", 0) == 0 || key.rfind("zip.", 0) == 0) {
      const bool zip = key[0] == 'z';
      const std::string target = key.substr(zip ? 4 : 6);
      find_field(target);
      if (target == "schema_version" || target == "run.seed" || target == "run.repeats" || target == "run.threads" ||
          target == "run.write_metrics") {
        fail(key, "this field cannot be swept");
      }
      auto values = split_list(value);
      if (values.empty()) fail(key, "needs at least one value");
      if (zip) {
        if (!zip_axis) {
          zip_axis = cfg.sweep.size();
          cfg.sweep.emplace_back();
        }
        cfg.sweep[*zip_axis].keys.push_back(target);
        cfg.sweep[*zip_axis].values.push_back(std::move(values));
      } else {
        cfg.sweep.push_back(SweepAxis{{target}, {std::move(values)}});
      }
      continue;
    }
    if (key == "schema_version") saw_version = true;
    set_field(cfg, key, value);
  }
  if (!saw_version) fail("schema_version", "missing; expected schema_version = " + std::to_string(kConfigSchemaVersion));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& key : config_keys()) out << key << " = " << get_field(cfg, key) << "\n";
  for (const auto& axis : cfg.sweep) {
    const char* prefix = axis.keys.size() > 1 ? "zip." : "sweep.";
    for (std::size_t k = 0; k < axis.keys.size(); ++k) {
      out << prefix << axis.keys[k] << " = ";
      for (std::size_t i = 0; i < axis.values[k].size(); ++i) out << (i ? ", " : "") << axis.values[k][i];
      out << "\n";
    }
  }
  return out.str();
}

std::string SweepPoint::label() const {
  if (overrides.empty()) return "base";
  std::string s;
  for (const auto& [k, v] : overrides) {
    if (!s.empty()) s += ",";
    s += k.substr(k.rfind('.') + 1) + "=" + v;
  }
  return s;
}

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig base = cfg;
  base.sweep.clear();
  std::size_t total = 1;
  for (const auto& axis : cfg.sweep) total *= axis.size();

  std::vector<SweepPoint> points;
  points.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepPoint pt;
    pt.index = idx;
    pt.config = base;
    std::size_t rem = idx;
    std::vector<std::size_t> pos(cfg.sweep.size());
    for (std::size_t a = cfg.sweep.size(); a-- > 0;) {
      pos[a] = rem % cfg.sweep[a].size();
      rem /= cfg.sweep[a].size();
    }
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a) {
      const auto& axis = cfg.sweep[a];
      for (std::size_t k = 0; k < axis.keys.size(); ++k) {
        const std::string& v = axis.values[k][pos[a]];
        set_field(pt.config, axis.keys[k], v);
        pt.overrides.emplace_back(axis.keys[k], v);
      }
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace aimc
