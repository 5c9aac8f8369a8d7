#include "hcraft/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hcraft/common/errors.hpp"

namespace hcraft::reward {

FeatureEncoder::FeatureEncoder(std::vector<std::string> vocabulary) : vocabulary_(std::move(vocabulary)) {
  std::sort(vocabulary_.begin(), vocabulary_.end());
  vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
}

FeatureEncoder FeatureEncoder::from_registry(const env::Registry& registry) {
  std::vector<std::string> vocab = registry.items();
  for (auto b : {env::Block::kTree, env::Block::kStone, env::Block::kWater, env::Block::kCraftingTable,
                 env::Block::kBedrock}) {
    vocab.emplace_back(env::block_name(b));
  }
  vocab.emplace_back(env::mob_name(env::MobKind::kCow));
  vocab.emplace_back(env::mob_name(env::MobKind::kSheep));
  return FeatureEncoder(std::move(vocab));
}

void FeatureEncoder::bump(FeatureVec& v, std::string_view name, double amount) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), name);
  if (it != vocabulary_.end() && *it == name) v[static_cast<std::size_t>(it - vocabulary_.begin())] += amount;
}

namespace {

void normalize(FeatureVec& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) return;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

}  // namespace

FeatureVec FeatureEncoder::embed(const env::Observation& obs, const env::Observation* previous) const {
  FeatureVec v(dim(), 0.0);
  for (const auto& ray : obs.rays) {
    if (ray.block_name != "air") bump(v, ray.block_name, 1.0);
    if (ray.entity_name != "none") bump(v, ray.entity_name, 1.0);
  }
  for (const auto& row : obs.voxels) {
    for (const auto& name : row) {
      if (name != "air") bump(v, name, 1.0);
    }
  }
  if (previous != nullptr) {
    for (std::size_t i = 0; i < obs.inventory_names.size(); ++i) {
      const auto& name = obs.inventory_names[i];
      if (name == "air") continue;
      const int delta = obs.inventory_counts[i] - previous->count(name);
      if (delta > 0) bump(v, name, delta);
    }
  }
  normalize(v);
  return v;
}

FeatureVec FeatureEncoder::embed_prompt(std::string_view text) const {
  std::vector<std::string> words;
  std::istringstream is{std::string(text)};
  for (std::string w; is >> w;) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    std::erase_if(w, [](unsigned char c) { return !std::isalnum(c) && c != '_'; });
    if (!w.empty()) words.push_back(w);
  }
  FeatureVec v(dim(), 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    bump(v, words[i], 1.0);
    if (words[i].size() > 1 && words[i].back() == 's') bump(v, words[i].substr(0, words[i].size() - 1), 1.0);
    if (i + 1 < words.size()) bump(v, words[i] + "_" + words[i + 1], 1.0);
  }
  normalize(v);
  return v;
}

bool is_degenerate(const FeatureVec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double cosine(const FeatureVec& a, const FeatureVec& b) {
  if (a.size() != b.size()) throw ContractViolation("cosine of vectors with different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void SimilarityModel::push(FeatureVec feature) {
  window.push_back(std::move(feature));
  while (window.size() > kWindowLength) window.pop_front();
}

SimilarityModel make_similarity_model(const FeatureEncoder& encoder, const env::TaskSpec& task,
                                      const std::vector<env::TaskSpec>& all_tasks) {
  SimilarityModel m;
  m.positive = encoder.embed_prompt(task.prompt);
  for (const auto& other : all_tasks) {
    if (other.task_id == task.task_id || static_cast<int>(m.negatives.size()) == kNegativePrompts) continue;
    m.negatives.push_back(encoder.embed_prompt(other.prompt));
  }
  // Distractors name symbols the positive prompt does not mention.
  std::set<std::string> own;
  for (std::size_t i = 0; i < encoder.dim(); ++i) {
    if (m.positive[i] != 0.0) own.insert(encoder.vocabulary()[i]);
  }
  std::vector<std::string> pool;
  for (const auto& name : encoder.vocabulary()) {
    if (!own.count(name)) pool.push_back(name);
  }
  for (std::size_t k = 0; static_cast<int>(m.negatives.size()) < kNegativePrompts; ++k) {
    const auto& a = pool[k % pool.size()];
    const auto& b = pool[(k * 7 + 3) % pool.size()];
    m.negatives.push_back(encoder.embed_prompt("find " + a + " near " + b));
  }
  return m;
}

std::array<double, kPromptCount> prompt_probabilities(const SimilarityModel& model) {
  if (static_cast<int>(model.negatives.size()) != kNegativePrompts) {
    throw ConfigError("similarity model needs exactly 31 negative prompts, got " +
                      std::to_string(model.negatives.size()));
  }
  if (model.window.empty()) throw ContractViolation("similarity window is empty");
  FeatureVec pooled(model.window.front().size(), 0.0);
  for (const auto& f : model.window) {
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += f[i];
  }
  for (double& x : pooled) x /= static_cast<double>(model.window.size());

  std::array<double, kPromptCount> sims{};
  sims[0] = cosine(pooled, model.positive);
  for (int i = 0; i < kNegativePrompts; ++i) sims[static_cast<std::size_t>(i + 1)] = cosine(pooled, model.negatives[static_cast<std::size_t>(i)]);
  const double mx = *std::max_element(sims.begin(), sims.end());
  double total = 0.0;
  for (double& s : sims) {
    s = std::exp(s - mx);
    total += s;
  }
  for (double& s : sims) s /= total;
  return sims;
}

double clip_reward(const SimilarityModel& model) {
  const auto p = prompt_probabilities(model);
  return std::max(p[0] - 1.0 / kPromptCount, 0.0);
}

void DistanceTracker::start(double d) {
  if (d < 0.0) throw ContractViolation("negative distance");
  history_min = d;
  last_distance = d;
  initialized = true;
}

double distance_reward_combat(DistanceTracker& tracker, double d) {
  if (d < 0.0 || std::isnan(d)) throw ContractViolation("negative distance");
  if (!tracker.initialized) throw ContractViolation("distance tracker not started");
  double r = 0.0;
  if (std::isfinite(tracker.history_min)) r = std::max(tracker.history_min - d, 0.0);
  tracker.history_min = std::min(tracker.history_min, d);
  tracker.last_distance = d;
  return r;
}

double distance_reward_mining(DistanceTracker& tracker, double d) {
  if (d < 0.0 || std::isnan(d)) throw ContractViolation("negative distance");
  double r = 0.0;
  if (std::isinf(d)) {
    r = -2.0;
  } else if (d < 1.5) {
    r = 2.0;
  } else if (std::isfinite(tracker.last_distance)) {
    r = tracker.last_distance - d;
  }
  tracker.last_distance = d;
  tracker.history_min = std::min(tracker.history_min, d);
  tracker.initialized = true;
  return r;
}

RewardFunction::RewardFunction(RewardConfig config, const FeatureEncoder* encoder, SimilarityModel prompts)
    : config_(std::move(config)), encoder_(encoder), model_(std::move(prompts)) {
  if (config_.clip_enabled && encoder_ == nullptr) throw ConfigError("similarity reward needs an encoder");
  if (config_.distance_enabled && config_.distance_target.empty()) {
    throw ConfigError("distance reward needs a target name");
  }
  tracker_.mode = config_.distance_mode;
}

void RewardFunction::reset(const env::Observation& first) {
  previous_ = first;
  model_.window.clear();
  if (config_.clip_enabled) model_.push(encoder_->embed(first));
  tracker_ = DistanceTracker{};
  tracker_.mode = config_.distance_mode;
  if (config_.distance_enabled) tracker_.start(first.nearest(config_.distance_target));
}

double RewardFunction::step(const env::Observation& obs, bool success) {
  double r = success ? config_.success_weight : 0.0;
  if (config_.clip_enabled) {
    model_.push(encoder_->embed(obs, &previous_));
    r += config_.clip_weight * clip_reward(model_);
  }
  if (config_.distance_enabled) {
    const double d = obs.nearest(config_.distance_target);
    r += config_.distance_weight * (config_.distance_mode == DistanceMode::kCombat
                                        ? distance_reward_combat(tracker_, d)
                                        : distance_reward_mining(tracker_, d));
  }
  previous_ = obs;
  return r;
}

}  // namespace hcraft::reward
