// aimc-sim: run, list and validate experiment configs.
#include "aimc/config.hpp"
#include "aimc/experiment.hpp"
#include "aimc/presets.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

namespace {

std::string pm(const aimc::PointSummary& p, const std::string& key) {
  if (!p.runs.front().values.count(key)) return "-";
  char buf[64];
  const double m = p.mean(key), s = p.stddev(key);
  if (std::isnan(m)) return "nan";
  if (p.runs.size() > 1) std::snprintf(buf, sizeof buf, "%.3e+-%.1e", m, s);
  else std::snprintf(buf, sizeof buf, "%.3e", m);
  return buf;
}

void print_table(const aimc::ExperimentResult& res, bool mnist) {
  const std::vector<std::string> keys =
      mnist ? std::vector<std::string>{"test_accuracy", "train_accuracy", "tail_loss"}
            : std::vector<std::string>{"tail_loss", "tail_dist_sq", "tail_grad_norm_sq", "e_rl"};
  std::printf("%-36s", "point");
  for (const auto& k : keys) std::printf(" %20s", k.c_str());
  std::printf("\n");
  for (const auto& p : res.points) {
    std::printf("%-36s", p.point.label().c_str());
    for (const auto& k : keys) std::printf(" %20s", pm(p, k).c_str());
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analog in-memory training simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a preset or config file");
  std::string preset_name, config_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  auto* p_opt = run->add_option("--preset", preset_name, "preset name (see list-presets)");
  run->add_option("--config", config_path, "config file")->excludes(p_opt);
  run->add_option("--set", overrides, "override a field, key=value (repeatable)");
  run->add_option("--out", out_dir, "output directory (default runs/<name>)");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--threads", threads, "parallel runs");
  bool quiet = false;
  run->add_flag("-q,--quiet", quiet, "no summary table");

  auto* list = app.add_subcommand("list-presets", "list the built-in presets");
  std::string show;
  list->add_option("--show", show, "print the config text of one preset");

  auto* validate = app.add_subcommand("validate", "check a config file");
  std::string validate_path;
  validate->add_option("config", validate_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      if (!show.empty()) {
        std::cout << aimc::preset_text(show);
        return 0;
      }
      for (const auto& n : aimc::preset_names()) std::printf("%-26s %s\n", n.c_str(), aimc::preset_description(n).c_str());
      return 0;
    }

    if (*validate) {
      const auto cfg = aimc::load_config(validate_path);
      const auto points = aimc::expand_sweep(cfg);
      std::printf("ok: %s, %zu point(s) x %d repeat(s)\n", cfg.name.c_str(), points.size(), cfg.run.repeats);
      return 0;
    }

    if (preset_name.empty() && config_path.empty()) {
      std::cerr << "run: need --preset or --config\n";
      return 2;
    }
    aimc::ExperimentConfig cfg = preset_name.empty() ? aimc::load_config(config_path) : aimc::preset(preset_name);
    for (const auto& o : overrides) aimc::apply_override(cfg, o);
    if (seed) cfg.run.seed = *seed;
    if (threads) cfg.run.threads = *threads;
    cfg.validate();
    if (out_dir.empty()) out_dir = "runs/" + cfg.name;

    const auto t0 = std::chrono::steady_clock::now();
    const auto res = aimc::run_experiment(cfg, out_dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!quiet) print_table(res, cfg.problem.kind == "mnist");
    std::printf("wrote %s (%.1f s)\n", out_dir.c_str(), secs);
    return 0;
  } catch (const aimc::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == aimc::ErrorKind::ConfigError || e.kind() == aimc::ErrorKind::UnknownPreset ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
