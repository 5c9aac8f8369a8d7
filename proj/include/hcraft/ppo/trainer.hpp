#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcraft/ppo/ppo.hpp"

namespace hcraft::ppo {

struct RlConfig {
  std::string task_id;
  std::optional<env::TaskSpec> task;  // used instead of the registry preset when set
  reward::RewardConfig reward;
  env::EnvOptions env_options;
  std::vector<script::MacroAction> macros;
  std::vector<script::ScriptAst> prefix;  // sequential coded actions run after every reset
  int rollout_length = 1024;                // decisions per update
  PpoHyper hyper;
  double gamma = 0.99;
  double lambda = 0.95;
  nn::AdamConfig adam;
  int hidden_dim = 64;
  std::uint64_t seed = 1;
  int eval_episodes = 100;
  int eval_interval = 10;  // updates between evaluations
  bool eval_greedy = false;

  /// Throws ConfigError when 0 < gamma <= 1, 0 <= lambda <= 1, clip > 0 or sizes are violated.
  void validate() const;
  env::TaskSpec resolve_task(const env::Registry& registry) const;
};

struct IterationMetrics {
  int iteration = 0;
  long frames = 0;
  int episodes = 0;               // finished during this rollout
  double train_success = 0.0;     // fraction of those episodes that reached the target
  double mean_return = 0.0;
  double eval_success = std::numeric_limits<double>::quiet_NaN();  // set on evaluation iterations
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int skipped_updates = 0;
};

struct TrainResult {
  std::unique_ptr<Policy> best;       // checkpoint with the highest evaluation success
  nn::Adam best_optimizer;
  double best_eval_success = 0.0;
  double final_success = 0.0;         // best checkpoint re-evaluated on held-out seeds
  long frames_used = 0;
  std::vector<IterationMetrics> metrics;
};

struct TrainHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
};

/// Runs PPO until `frame_budget` env frames were consumed. Throws ConfigError when the budget is
/// smaller than one rollout.
TrainResult train(const RlConfig& cfg, std::shared_ptr<const env::Registry> registry, long frame_budget,
                  const TrainHooks& hooks = {});

/// Success fraction of the policy over `episodes` fresh episodes seeded from `seed_base`.
double evaluate_policy(const Policy& policy, const RlConfig& cfg, std::shared_ptr<const env::Registry> registry,
                       int episodes, std::uint64_t seed_base);

/// Success fraction of a coded solution alone (no RL): the script runs from reset until it stops
/// or the episode ends.
double evaluate_script(const script::ScriptAst& script, const RlConfig& cfg,
                       std::shared_ptr<const env::Registry> registry, int episodes, std::uint64_t seed_base);

/// Held-out evaluation seed ranges derived from the training seed.
std::uint64_t eval_seed_base(std::uint64_t seed);
std::uint64_t final_seed_base(std::uint64_t seed);

}  // namespace hcraft::ppo
