#include "hcraft/ppo/ppo.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hcraft/common/errors.hpp"
#include "hcraft/script/interpreter.hpp"

namespace hcraft::ppo {

double discounted_reward(const Transition& t, double gamma) {
  double total = 0.0, g = 1.0;
  for (double r : t.frame_rewards) {
    total += g * r;
    g *= gamma;
  }
  return total;
}

GaeResult gae(const std::vector<Transition>& transitions, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = transitions.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const auto& t = transitions[i];
    const double discount = std::pow(gamma, t.frames_consumed);
    const double live = t.done ? 0.0 : 1.0;
    const double delta = discounted_reward(t, gamma) + discount * next_value * live - t.value;
    next_adv = delta + discount * lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + t.value;
    next_value = t.value;
  }
  out.normalized = out.advantages;
  if (n > 0) {
    const double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : out.normalized) a = (a - mean) / (sd + 1e-8);
  }
  return out;
}

Policy::Policy(ExtendedActionSpace space, int obs_dim, int hidden_dim, std::uint64_t seed)
    : space_(std::move(space)), net_(nn::MlpShape{obs_dim, hidden_dim, space_.head_dims()}, seed) {}

namespace {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits.array() - lse;
}

}  // namespace

Policy::Decision Policy::act(const Eigen::VectorXd& obs, std::mt19937_64& rng, bool greedy) const {
  const auto out = net_.infer(obs);
  Decision d;
  d.value = out.value;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t h = 0; h < out.logits.size(); ++h) {
    const Eigen::VectorXd lp = log_softmax(out.logits[h]);
    int choice = 0;
    if (greedy) {
      lp.maxCoeff(&choice);
    } else {
      const double u = unit(rng);
      double acc = 0.0;
      choice = static_cast<int>(lp.size()) - 1;
      for (Eigen::Index k = 0; k < lp.size(); ++k) {
        acc += std::exp(lp(k));
        if (u < acc) {
          choice = static_cast<int>(k);
          break;
        }
      }
    }
    d.action[h] = choice;
    d.log_prob += lp(choice);
  }
  return d;
}

double Policy::log_prob(const Eigen::VectorXd& obs, const ActionIndices& action) const {
  const auto out = net_.infer(obs);
  double total = 0.0;
  for (std::size_t h = 0; h < out.logits.size(); ++h) total += log_softmax(out.logits[h])(action[h]);
  return total;
}

namespace {

reward::RewardFunction make_reward(const env::Registry& registry, const env::TaskSpec& task,
                                   const reward::RewardConfig& cfg, const reward::FeatureEncoder& enc) {
  return reward::RewardFunction(cfg, &enc, reward::make_similarity_model(enc, task, registry.tasks()));
}

}  // namespace

RolloutWorker::RolloutWorker(std::shared_ptr<const env::Registry> registry, env::TaskSpec task,
                             env::EnvOptions options, reward::RewardConfig reward_cfg,
                             std::vector<script::ScriptAst> prefix, std::uint64_t seed)
    : env_(registry, task, options),
      encoder_(*registry, options),
      text_encoder_(std::make_unique<reward::FeatureEncoder>(reward::FeatureEncoder::from_registry(*registry))),
      reward_(make_reward(*registry, task, reward_cfg, *text_encoder_)),
      prefix_(std::move(prefix)),
      seed_rng_(seed) {
  next_episode();
}

double RolloutWorker::frame_reward(const env::StepResult& r) {
  const bool success = r.done && env_.state().success;
  const double x = reward_.step(r.observation, success);
  ++total_frames_;
  ++current_.frames;
  current_.total_reward += x;
  return x;
}

void RolloutWorker::finish_episode() {
  current_.success = env_.state().success;
  finished_.push_back(current_);
}

bool RolloutWorker::begin_episode(std::uint64_t seed) {
  current_ = EpisodeRecord{};
  current_.seed = seed;
  env_.reset(seed);
  reward_.reset(env_.observation());
  for (const auto& script : prefix_) {
    if (env_.done()) break;
    script::EnvActuator act(env_, [this](const env::MultiDiscreteAction&, const env::StepResult& r) { frame_reward(r); });
    script::interpret(script, act, env_.simulator().task().max_steps - static_cast<int>(env_.state().tick));
  }
  if (env_.done()) {
    finish_episode();
    return false;
  }
  return true;
}

void RolloutWorker::edit_state(const std::function<void(env::WorldState&)>& edit) {
  edit(env_.mutable_state());
  reward_.reset(env_.refresh());
}

void RolloutWorker::next_episode() {
  for (int tries = 0; tries < 1000; ++tries) {
    if (begin_episode(seed_rng_())) return;
  }
  throw NoDecisionError("every episode ends before the policy gets to act");
}

RolloutWorker::StepOutcome RolloutWorker::apply(const ExtendedActionSpace& space, const ActionIndices& action) {
  if (env_.done()) throw ContractViolation("apply called on a finished episode");
  StepOutcome out;
  if (space.is_macro(action)) {
    const auto& macro = space.macro_at(action[env::kDimFunctional]);
    script::EnvActuator act(env_, [this, &out](const env::MultiDiscreteAction&, const env::StepResult& r) {
      out.frame_rewards.push_back(frame_reward(r));
    });
    const int remaining = env_.simulator().task().max_steps - static_cast<int>(env_.state().tick);
    macro.run(act, std::max(remaining, 1));
  } else {
    const auto& r = env_.step(env::MultiDiscreteAction::from_array(action));
    out.frame_rewards.push_back(frame_reward(r));
  }
  out.frames = static_cast<int>(out.frame_rewards.size());
  out.reward = std::accumulate(out.frame_rewards.begin(), out.frame_rewards.end(), 0.0);
  out.done = env_.done();
  if (out.done) finish_episode();
  return out;
}

std::vector<EpisodeRecord> RolloutWorker::take_finished() {
  std::vector<EpisodeRecord> out;
  out.swap(finished_);
  return out;
}

Batch collect_rollout(const Policy& policy, RolloutWorker& worker, int n, std::mt19937_64& rng) {
  Batch batch;
  batch.transitions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (worker.done()) worker.next_episode();
    Transition t;
    t.obs = worker.features();
    const auto d = policy.act(t.obs, rng);
    t.action = d.action;
    t.log_prob = d.log_prob;
    t.value = d.value;
    auto o = worker.apply(policy.space(), d.action);
    t.reward = o.reward;
    t.frame_rewards = std::move(o.frame_rewards);
    t.frames_consumed = o.frames;
    t.done = o.done;
    batch.transitions.push_back(std::move(t));
  }
  batch.bootstrap_value = worker.done() ? 0.0 : policy.value(worker.features());
  return batch;
}

LossParts ppo_loss(nn::Tape& tape, nn::Mlp& net, const nn::Matrix& obs, const std::vector<ActionIndices>& actions,
                   const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& advantages,
                   const Eigen::VectorXd& returns, const PpoHyper& hyper) {
  const auto out = net.forward(tape, obs);
  const std::size_t n = actions.size();
  nn::Var logp;
  nn::Var entropy;
  for (std::size_t h = 0; h < out.logits.size(); ++h) {
    std::vector<int> picks(n);
    for (std::size_t i = 0; i < n; ++i) picks[i] = actions[i][h];
    const nn::Var lp = nn::log_softmax_rows(out.logits[h]);
    const nn::Var chosen = nn::gather_cols(lp, picks);
    const nn::Var ent = nn::scale(nn::mean(nn::sum_rows(nn::mul(nn::exp(lp), lp))), -1.0);
    logp = h == 0 ? chosen : nn::add(logp, chosen);
    entropy = h == 0 ? ent : nn::add(entropy, ent);
  }
  const nn::Var adv = tape.constant(advantages);
  const nn::Var ratio = nn::exp(nn::sub(logp, tape.constant(old_log_prob)));
  const nn::Var surr = nn::minimum(nn::mul(ratio, adv), nn::mul(nn::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip), adv));
  LossParts parts;
  parts.policy = nn::scale(nn::mean(surr), -1.0);
  parts.value = nn::mean(nn::square(nn::sub(out.value, tape.constant(returns))));
  parts.entropy = entropy;
  parts.total = nn::sub(nn::add(parts.policy, nn::scale(parts.value, hyper.value_coef)),
                        nn::scale(parts.entropy, hyper.entropy_coef));
  return parts;
}

LossStats ppo_update(Policy& policy, nn::Adam& opt, const Batch& batch, const GaeResult& adv, const PpoHyper& hyper,
                     std::mt19937_64& rng) {
  LossStats stats;
  const auto& ts = batch.transitions;
  const std::size_t n = ts.size();
  if (n == 0) return stats;
  const int dim = static_cast<int>(ts.front().obs.size());
  const std::size_t mb = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, hyper.minibatch)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  nn::Tape tape;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t len = std::min(mb, n - start);
      nn::Matrix obs(static_cast<Eigen::Index>(len), dim);
      std::vector<ActionIndices> actions(len);
      Eigen::VectorXd old_lp(len), a(len), ret(len);
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t i = order[start + j];
        obs.row(static_cast<Eigen::Index>(j)) = ts[i].obs.transpose();
        actions[j] = ts[i].action;
        old_lp(static_cast<Eigen::Index>(j)) = ts[i].log_prob;
        a(static_cast<Eigen::Index>(j)) = adv.normalized[i];
        ret(static_cast<Eigen::Index>(j)) = adv.returns[i];
      }
      tape.clear();
      const auto parts = ppo_loss(tape, policy.net(), obs, actions, old_lp, a, ret, hyper);
      const double total = parts.total.value()(0, 0);
      if (!std::isfinite(total)) {
        spdlog::warn("ppo: non-finite loss, minibatch skipped");
        ++stats.skipped;
        continue;
      }
      policy.net().zero_grad();
      tape.backward(parts.total);
      if (!opt.step(policy.net().parameters())) {
        ++stats.skipped;
        continue;
      }
      if (!policy.net().all_finite()) throw ContractViolation("network parameters became non-finite");
      stats.policy_loss += parts.policy.value()(0, 0);
      stats.value_loss += parts.value.value()(0, 0);
      stats.entropy += parts.entropy.value()(0, 0);
      ++stats.updates;
    }
  }
  if (stats.updates > 0) {
    stats.policy_loss /= stats.updates;
    stats.value_loss /= stats.updates;
    stats.entropy /= stats.updates;
  }
  return stats;
}

}  // namespace hcraft::ppo
