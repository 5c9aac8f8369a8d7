#include "hcraft/ppo/trainer.hpp"

#include <cmath>

#include "hcraft/common/errors.hpp"
#include "hcraft/script/interpreter.hpp"

namespace hcraft::ppo {

void RlConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(hyper.clip > 0.0)) throw ConfigError("clip epsilon must be positive");
  if (rollout_length <= 0 || hyper.epochs <= 0 || hyper.minibatch <= 0 || hidden_dim <= 0) {
    throw ConfigError("rollout length, epochs, minibatch and hidden size must be positive");
  }
  if (eval_episodes <= 0 || eval_interval <= 0) throw ConfigError("evaluation sizes must be positive");
}

env::TaskSpec RlConfig::resolve_task(const env::Registry& registry) const {
  return task ? *task : registry.task(task_id);
}

std::uint64_t eval_seed_base(std::uint64_t seed) { return 1'000'000'000ULL + seed * 100'003ULL; }
std::uint64_t final_seed_base(std::uint64_t seed) { return 5'000'000'000ULL + seed * 100'003ULL; }

namespace {

ExtendedActionSpace space_for(const RlConfig& cfg, const std::shared_ptr<const env::Registry>& registry) {
  const env::Simulator sim(registry, cfg.resolve_task(*registry), cfg.env_options);
  return build_action_space(sim.cardinalities(), cfg.macros);
}

}  // namespace

double evaluate_policy(const Policy& policy, const RlConfig& cfg, std::shared_ptr<const env::Registry> registry,
                       int episodes, std::uint64_t seed_base) {
  RolloutWorker worker(registry, cfg.resolve_task(*registry), cfg.env_options, cfg.reward, cfg.prefix, seed_base);
  std::mt19937_64 rng(seed_base ^ 0x9e3779b97f4a7c15ULL);
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    if (worker.begin_episode(seed_base + static_cast<std::uint64_t>(e))) {
      while (!worker.done()) worker.apply(policy.space(), policy.act(worker.features(), rng, cfg.eval_greedy).action);
    }
    for (const auto& rec : worker.take_finished()) successes += rec.success ? 1 : 0;
  }
  return static_cast<double>(successes) / episodes;
}

double evaluate_script(const script::ScriptAst& script, const RlConfig& cfg,
                       std::shared_ptr<const env::Registry> registry, int episodes, std::uint64_t seed_base) {
  env::Env env(registry, cfg.resolve_task(*registry), cfg.env_options);
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(seed_base + static_cast<std::uint64_t>(e));
    script::EnvActuator act(env);
    script::interpret(script, act, env.simulator().task().max_steps);
    successes += env.state().success ? 1 : 0;
  }
  return static_cast<double>(successes) / episodes;
}

TrainResult train(const RlConfig& cfg, std::shared_ptr<const env::Registry> registry, long frame_budget,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (frame_budget < cfg.rollout_length) {
    throw ConfigError("frame budget " + std::to_string(frame_budget) + " is smaller than one rollout of " +
                      std::to_string(cfg.rollout_length));
  }
  const auto space = space_for(cfg, registry);
  RolloutWorker worker(registry, cfg.resolve_task(*registry), cfg.env_options, cfg.reward, cfg.prefix, cfg.seed);
  Policy policy(space, worker.feature_dim(), cfg.hidden_dim, cfg.seed);
  nn::Adam opt(cfg.adam);
  std::mt19937_64 rng(cfg.seed * 0x2545F4914F6CDD1DULL + 7);

  TrainResult result;
  result.best = std::make_unique<Policy>(policy);
  result.best_eval_success = -1.0;
  int iteration = 0;
  auto evaluate_and_keep = [&](IterationMetrics& m) {
    m.eval_success = evaluate_policy(policy, cfg, registry, cfg.eval_episodes, eval_seed_base(cfg.seed));
    if (m.eval_success > result.best_eval_success) {
      result.best_eval_success = m.eval_success;
      *result.best = policy;
      result.best_optimizer = opt;
    }
  };

  while (worker.total_frames() < frame_budget) {
    ++iteration;
    const auto batch = collect_rollout(policy, worker, cfg.rollout_length, rng);
    const auto adv = gae(batch.transitions, batch.bootstrap_value, cfg.gamma, cfg.lambda);
    const auto stats = ppo_update(policy, opt, batch, adv, cfg.hyper, rng);

    IterationMetrics m;
    m.iteration = iteration;
    m.frames = worker.total_frames();
    const auto episodes = worker.take_finished();
    m.episodes = static_cast<int>(episodes.size());
    for (const auto& e : episodes) {
      m.train_success += e.success ? 1.0 : 0.0;
      m.mean_return += e.total_reward;
    }
    if (m.episodes > 0) {
      m.train_success /= m.episodes;
      m.mean_return /= m.episodes;
    }
    m.policy_loss = stats.policy_loss;
    m.value_loss = stats.value_loss;
    m.entropy = stats.entropy;
    m.skipped_updates = stats.skipped;
    const bool last = worker.total_frames() >= frame_budget;
    if (iteration % cfg.eval_interval == 0 || last) evaluate_and_keep(m);
    result.metrics.push_back(m);
    if (hooks.on_iteration) hooks.on_iteration(m);
  }
  result.frames_used = worker.total_frames();
  result.final_success = evaluate_policy(*result.best, cfg, registry, cfg.eval_episodes, final_seed_base(cfg.seed));
  return result;
}

}  // namespace hcraft::ppo
