#pragma once

#include <array>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "hcraft/env/registry.hpp"
#include "hcraft/env/types.hpp"

namespace hcraft::reward {

using FeatureVec = std::vector<double>;

inline constexpr int kNegativePrompts = 31;
inline constexpr int kPromptCount = kNegativePrompts + 1;
inline constexpr std::size_t kWindowLength = 16;

/// Bag-of-symbols encoder standing in for a learned video/text encoder. Observations and prompt
/// descriptors land in the same space so cosine similarity between them is meaningful.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(std::vector<std::string> vocabulary);
  /// Vocabulary of block, mob and item names known to the registry.
  static FeatureEncoder from_registry(const env::Registry& registry);

  /// Counts of visible block/entity names plus positive inventory deltas against `previous`,
  /// L2-normalised. Returns the zero vector when nothing is visible.
  FeatureVec embed(const env::Observation& obs, const env::Observation* previous = nullptr) const;
  /// Words (and underscore-joined word pairs) of the descriptor that name vocabulary symbols.
  FeatureVec embed_prompt(std::string_view text) const;

  std::size_t dim() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  void bump(FeatureVec& v, std::string_view name, double amount) const;

  std::vector<std::string> vocabulary_;
};

bool is_degenerate(const FeatureVec& v);
/// Cosine similarity; defined as 0 when either side is the zero vector.
double cosine(const FeatureVec& a, const FeatureVec& b);

struct SimilarityModel {
  FeatureVec positive;
  std::vector<FeatureVec> negatives;
  std::deque<FeatureVec> window;  // most recent observation features, oldest first

  /// Appends a frame feature and drops the oldest beyond 16.
  void push(FeatureVec feature);
};

/// Positive prompt plus the other registered task prompts as negatives, padded with synthetic
/// distractor descriptors up to 31.
SimilarityModel make_similarity_model(const FeatureEncoder& encoder, const env::TaskSpec& task,
                                      const std::vector<env::TaskSpec>& all_tasks);

/// Softmax over the 32 cosine similarities between the mean-pooled window and each prompt;
/// entry 0 is the positive prompt.
std::array<double, kPromptCount> prompt_probabilities(const SimilarityModel& model);

/// max{p - 1/32, 0}. Throws ConfigError unless there are exactly 31 negatives and
/// ContractViolation on an empty window.
double clip_reward(const SimilarityModel& model);

enum class DistanceMode { kCombat, kMining };

struct DistanceTracker {
  DistanceMode mode = DistanceMode::kCombat;
  double history_min = env::kInfinity;
  double last_distance = env::kInfinity;
  bool initialized = false;

  /// Records the first observed distance of an episode.
  void start(double d);
};

/// max{min_{t'<t} d_t' - d_t, 0}; updates history_min. Negative d is a contract violation.
/// While nothing has been seen yet (history_min infinite) the reward is 0.
double distance_reward_combat(DistanceTracker& tracker, double d);

/// d_{t-1} - d_t when 1.5 <= d_t < inf, 2 when d_t < 1.5, -2 when the target is lost.
/// A target reacquired after being lost (d_{t-1} infinite) yields 0.
double distance_reward_mining(DistanceTracker& tracker, double d);

struct RewardConfig {
  double success_weight = 1.0;
  bool clip_enabled = false;
  double clip_weight = 1.0;
  bool distance_enabled = false;
  DistanceMode distance_mode = DistanceMode::kMining;
  std::string distance_target;  // block or entity name the distance is measured to
  double distance_weight = 1.0;
};

/// Per-episode reward state. Each rollout worker owns its own instance.
class RewardFunction {
 public:
  RewardFunction(RewardConfig config, const FeatureEncoder* encoder, SimilarityModel prompts);

  void reset(const env::Observation& first);
  /// Weighted sum of the sparse success signal and the active dense terms for one frame.
  double step(const env::Observation& obs, bool success);

  const RewardConfig& config() const { return config_; }

 private:
  RewardConfig config_;
  const FeatureEncoder* encoder_;
  SimilarityModel model_;
  DistanceTracker tracker_;
  env::Observation previous_;
};

}  // namespace hcraft::reward
