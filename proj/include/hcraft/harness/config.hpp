#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hcraft/agents/two_loop.hpp"

namespace hcraft::harness {

struct BackendConfig {
  std::string kind = "scripted";     // scripted | http
  std::filesystem::path fixture;     // scripted: fixture file, resolved against the config directory
  std::string endpoint;              // http
  std::string model;
  std::string key_env;               // name of the variable holding the key, never the key
  double temperature = 0.0;
  int timeout_seconds = 60;
  int retries = 2;
};

/// Everything a run needs. Loaded from an INI file with sections
/// [run] [env] [reward] [ppo] [agents] [backend] [ablate]; unknown keys are errors.
struct RunConfig {
  std::string run_id = "run";
  std::string task_id;
  std::filesystem::path data_file;
  std::filesystem::path output_dir = "runs";
  std::vector<std::uint64_t> seeds{1};
  BackendConfig backend;
  std::string critic = "rules";  // rules | backend
  agents::TwoLoopOptions agents; // includes the RL settings in agents.rl
  std::vector<std::string> variants;
  std::filesystem::path config_file;  // where this config came from, empty when built in code
};

/// Throws ConfigError naming the file (and line, for syntax errors) on anything invalid.
RunConfig load_config(const std::filesystem::path& path);
/// Parses INI text; `base_dir` resolves relative paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::string& origin = "<config>");

/// Checks cross-field rules and external references: known task, readable fixture, key variable
/// set for http backends, known ablation variants. Throws ConfigError.
void validate(const RunConfig& cfg);

/// Normalized INI text; parse_config(render_config(c)) reproduces c.
std::string render_config(const RunConfig& cfg);

/// Ablation variants in table order.
const std::vector<std::string>& known_variants();

}  // namespace hcraft::harness
