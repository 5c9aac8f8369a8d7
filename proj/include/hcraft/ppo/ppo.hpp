#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "hcraft/common/errors.hpp"
#include "hcraft/env/simulator.hpp"
#include "hcraft/nn/mlp.hpp"
#include "hcraft/ppo/action_space.hpp"
#include "hcraft/ppo/features.hpp"
#include "hcraft/reward/reward.hpp"
#include "hcraft/script/ast.hpp"

namespace hcraft::ppo {

/// Every episode ends (reset or coded prefix) before a decision is needed, so there is nothing to learn.
class NoDecisionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct Transition {
  Eigen::VectorXd obs;
  ActionIndices action{};
  double log_prob = 0.0;  // sum of per-dimension categorical log-probabilities
  double value = 0.0;
  double reward = 0.0;               // plain sum of frame_rewards
  std::vector<double> frame_rewards;  // one entry per env frame the decision consumed
  int frames_consumed = 1;
  bool done = false;
};

struct Batch {
  std::vector<Transition> transitions;
  double bootstrap_value = 0.0;  // V of the state after the last transition (0 if it ended an episode)
};

/// Reward of one decision discounted inside the decision: sum_i gamma^i r_i.
double discounted_reward(const Transition& t, double gamma);

struct GaeResult {
  std::vector<double> advantages;  // raw
  std::vector<double> normalized;  // zero mean, unit variance over the batch
  std::vector<double> returns;     // advantages + values
};

/// delta_t = R_t + gamma^k_t V_{t+1} (1 - done_t) - V_t with R_t the in-decision discounted
/// reward and k_t the frames the decision consumed; A_t = delta_t + gamma^k_t lambda (1 - done_t) A_{t+1}.
GaeResult gae(const std::vector<Transition>& transitions, double bootstrap_value, double gamma, double lambda);

/// Categorical policy with one head per action dimension plus a value head.
class Policy {
 public:
  Policy(ExtendedActionSpace space, int obs_dim, int hidden_dim, std::uint64_t seed);

  struct Decision {
    ActionIndices action{};
    double log_prob = 0.0;
    double value = 0.0;
  };
  Decision act(const Eigen::VectorXd& obs, std::mt19937_64& rng, bool greedy = false) const;
  double value(const Eigen::VectorXd& obs) const { return net_.infer(obs).value; }
  /// Sum of per-head log-probabilities of a given action.
  double log_prob(const Eigen::VectorXd& obs, const ActionIndices& action) const;

  const ExtendedActionSpace& space() const { return space_; }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  ExtendedActionSpace space_;
  nn::Mlp net_;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  double total_reward = 0.0;
  bool success = false;
  int frames = 0;
};

/// One environment plus its reward state. Applies primitive and macro tokens alike; a macro runs
/// its whole script as a single decision. Coded prefix scripts run in order after every reset.
class RolloutWorker {
 public:
  RolloutWorker(std::shared_ptr<const env::Registry> registry, env::TaskSpec task, env::EnvOptions options,
                reward::RewardConfig reward_cfg, std::vector<script::ScriptAst> prefix, std::uint64_t seed);

  /// Resets with the given seed and runs the prefix. Returns false when the episode already ended
  /// during the prefix (it is then recorded as finished).
  bool begin_episode(std::uint64_t seed);
  /// Starts episodes with internally drawn seeds until one survives its prefix. Throws ConfigError
  /// after 1000 episodes that all ended before the first decision.
  void next_episode();

  struct StepOutcome {
    double reward = 0.0;
    std::vector<double> frame_rewards;
    int frames = 0;
    bool done = false;
  };
  /// Throws ContractViolation when the episode is over, std::out_of_range on invalid components.
  StepOutcome apply(const ExtendedActionSpace& space, const ActionIndices& action);

  /// Edits the live world (test setups), then refreshes the observation and the reward baseline.
  void edit_state(const std::function<void(env::WorldState&)>& edit);

  const env::Observation& observation() const { return env_.observation(); }
  Eigen::VectorXd features() const { return encoder_.encode(env_.observation()); }
  int feature_dim() const { return encoder_.dim(); }
  bool done() const { return env_.done(); }
  const env::Env& env() const { return env_; }
  long total_frames() const { return total_frames_; }
  std::vector<EpisodeRecord> take_finished();

 private:
  double frame_reward(const env::StepResult& r);
  void finish_episode();

  env::Env env_;
  ObservationEncoder encoder_;
  std::unique_ptr<reward::FeatureEncoder> text_encoder_;
  reward::RewardFunction reward_;
  std::vector<script::ScriptAst> prefix_;
  std::mt19937_64 seed_rng_;
  EpisodeRecord current_;
  std::vector<EpisodeRecord> finished_;
  long total_frames_ = 0;
};

/// Collects exactly n decisions, auto-resetting finished episodes.
Batch collect_rollout(const Policy& policy, RolloutWorker& worker, int n, std::mt19937_64& rng);

struct PpoHyper {
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int epochs = 4;
  int minibatch = 256;
};

struct LossParts {
  nn::Var total;
  nn::Var policy;   // -mean clipped surrogate
  nn::Var value;    // mean squared value error
  nn::Var entropy;  // mean summed per-head entropy
};

/// Clipped surrogate + value error - entropy bonus over a minibatch.
LossParts ppo_loss(nn::Tape& tape, nn::Mlp& net, const nn::Matrix& obs, const std::vector<ActionIndices>& actions,
                   const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& advantages,
                   const Eigen::VectorXd& returns, const PpoHyper& hyper);

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int updates = 0;
  int skipped = 0;  // minibatches dropped for a non-finite loss or gradient
};

LossStats ppo_update(Policy& policy, nn::Adam& opt, const Batch& batch, const GaeResult& adv, const PpoHyper& hyper,
                     std::mt19937_64& rng);

}  // namespace hcraft::ppo
