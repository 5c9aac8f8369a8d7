// hcraft: run, ablate, curves, validate-config.
//
// Exit codes: 0 solved (or command succeeded), 1 invalid config or arguments, 2 some seed
// exhausted its budget, 3 some seed halted on a backend outage or plan parse failure,
// 4 unexpected error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hcraft/common/errors.hpp"
#include "hcraft/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace hcraft;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("hcraft"));
  spdlog::set_pattern("[%H:%M:%S] %v");

  CLI::App app{"Two-loop code/RL agent harness on a grid crafting world"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors on stderr");

  std::string config_path;
  bool resume = false;
  auto* run = app.add_subcommand("run", "Run the agent on every configured seed");
  run->add_option("config", config_path, "Config file")->required();
  run->add_flag("--resume", resume, "Continue an interrupted run from its checkpoints");

  std::vector<std::string> variants;
  auto* ablate = app.add_subcommand("ablate", "Run ablation variants and write a comparison table");
  ablate->add_option("config", config_path, "Config file")->required();
  ablate->add_option("--variants", variants, "Variants to run, overriding the config")->delimiter(',');

  std::vector<std::string> run_dirs;
  long grid = 0;
  auto* curves = app.add_subcommand("curves", "Extract learning curves from run directories");
  curves->add_option("runs", run_dirs, "Run directories");
  curves->add_option("--grid", grid, "Resample every N frames (0 keeps logged points)")->check(CLI::NonNegativeNumber);

  auto* check = app.add_subcommand("validate-config", "Check a config without running anything");
  check->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : harness::kExitConfig;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*run) {
      const auto summary = harness::cmd_run(harness::load_config(config_path), resume);
      std::ifstream in(summary.dir / "summary.txt");
      std::cout << in.rdbuf();
      return summary.exit_code;
    }
    if (*ablate) {
      auto cfg = harness::load_config(config_path);
      if (!variants.empty()) cfg.variants = variants;
      const auto rows = harness::cmd_ablate(cfg);
      std::cout << harness::format_ablation(rows, cfg.seeds);
      return harness::kExitSolved;
    }
    if (*curves) {
      for (const auto& d : run_dirs) std::cout << harness::cmd_curves(d, grid).string() << "\n";
      return harness::kExitSolved;
    }
    if (*check) {
      const auto cfg = harness::load_config(config_path);
      harness::validate(cfg);
      std::cout << "ok: task " << cfg.task_id << ", " << cfg.seeds.size() << " seed(s), backend " << cfg.backend.kind
                << "\n";
      return harness::kExitSolved;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return harness::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::kExitInternal;
  }
  return harness::kExitInternal;
}
