#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcraft/harness/config.hpp"

namespace hcraft::harness {

/// Process exit codes of the CLI.
enum ExitCode : int {
  kExitSolved = 0,          // every seed solved
  kExitConfig = 1,          // invalid config or arguments; nothing was written
  kExitBudgetExhausted = 2, // some seed ran out of rounds, none halted
  kExitHalted = 3,          // some seed hit a backend outage or a plan parse failure
  kExitInternal = 4,        // unexpected error
};

/// Backends and critic built from a config. Slow and fast agents get separate backend instances.
struct AgentSet {
  std::unique_ptr<agents::Backend> slow;
  std::unique_ptr<agents::Backend> fast;
  std::unique_ptr<agents::Backend> critic_backend;
  std::unique_ptr<agents::Critic> critic;
  agents::Agents view() const { return {slow.get(), fast.get(), critic.get()}; }
};
AgentSet make_agents(const RunConfig& cfg);

struct SeedOutcome {
  std::uint64_t seed = 0;
  agents::RunStatus status = agents::RunStatus::kRunning;
  double final_success = 0.0;
  long rl_frames = 0;
  int rounds = 0;
  double wall_seconds = 0.0;
};

struct RunSummary {
  std::string run_id;
  std::filesystem::path dir;
  std::vector<SeedOutcome> seeds;
  double mean_success = 0.0;
  int exit_code = kExitSolved;
};

/// Runs the two-loop driver once per seed into <output_dir>/<run id>/. The run directory must not
/// exist unless `resume` is set, in which case finished seeds are kept and interrupted ones
/// continue from their checkpoint. Validates the config first and throws ConfigError before
/// touching the file system.
///
/// Layout:
///   config.ini                 normalized config snapshot
///   summary.json, summary.txt  per-seed status and success, mean, wall clock
///   seed-<n>/events.jsonl      event log, one JSON object per line
///   seed-<n>/checkpoint.json   resumable state after the last finished round
///   seed-<n>/report.json       full run report
///   seed-<n>/round-<k>/        slow_prompt.txt, plan.txt, critiques.txt,
///                              sub-<i>-attempt-<j>.hcs, rl_metrics.jsonl, policy.ckpt
RunSummary cmd_run(const RunConfig& cfg, bool resume);

/// Same driver for one seed with explicit options, writing the seed directory layout above.
SeedOutcome run_seed(const RunConfig& cfg, const agents::TwoLoopOptions& options, std::uint64_t seed,
                     const std::filesystem::path& dir, bool resume);

struct AblationRow {
  std::string variant;
  std::vector<double> per_seed;
  double mean = 0.0;
};

/// Runs every configured variant (all known ones when none are listed) over the config's seeds
/// into <output_dir>/<run id>-ablate/<variant>/seed-<n>/ and writes ablation.jsonl and ablation.txt.
/// Success of a run is the success of its last round.
std::vector<AblationRow> cmd_ablate(const RunConfig& cfg);
std::string format_ablation(const std::vector<AblationRow>& rows, const std::vector<std::uint64_t>& seeds);

struct CurvePoint {
  long frames = 0;
  std::optional<double> success;  // empty: no evaluation at this point (gap)
};

struct Curve {
  std::string source;  // events file the curve came from
  std::uint64_t seed = 0;
  int round = 0;
  std::vector<CurvePoint> points;
};

/// Learning curves from every events.jsonl below `dir` that records RL training.
/// Throws ConfigError when `dir` does not exist.
std::vector<Curve> read_curves(const std::filesystem::path& dir);

/// Curve resampled at grid, 2*grid, ... up to its last frame count: the latest evaluation at or
/// before each grid point, or a gap when none happened yet.
std::vector<CurvePoint> align(const Curve& curve, long grid);

/// One JSON line per point.
std::string curve_lines(const Curve& curve, const std::vector<CurvePoint>& points);

/// Writes <run_dir>/curves.jsonl with every curve of the run, resampled when grid > 0 and as
/// logged otherwise. Returns the file written.
std::filesystem::path cmd_curves(const std::filesystem::path& run_dir, long grid);

}  // namespace hcraft::harness
