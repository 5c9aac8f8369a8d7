#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hcraft/nn/tape.hpp"

namespace hcraft::nn {

struct MlpShape {
  int input_dim = 0;
  int hidden_dim = 64;
  std::vector<int> head_dims;  // one categorical head per action dimension

  int total_logits() const;
  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Output of a batched forward pass: one N x head_dim logits node per head plus N x 1 values.
struct TapeOutputs {
  std::vector<Var> logits;
  Var value;
};

struct Inference {
  std::vector<Eigen::VectorXd> logits;
  double value = 0.0;
};

/// Shared two-layer tanh trunk feeding concatenated policy heads and a scalar value head.
class Mlp {
 public:
  Mlp() = default;
  /// Scaled-normal initialisation; policy head weights are shrunk so the initial policy is
  /// close to uniform.
  Mlp(MlpShape shape, std::uint64_t seed);

  /// x is N x input_dim. Throws ContractViolation on a dimension mismatch.
  TapeOutputs forward(Tape& tape, const Matrix& x);
  /// Tape-free single observation pass for rollouts.
  Inference infer(const Eigen::VectorXd& obs) const;

  const MlpShape& shape() const { return shape_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
  bool all_finite() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  MlpShape shape_;
  Parameter w1_, b1_, w2_, b2_, wp_, bp_, wv_, bv_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.5;  // global norm clip; <= 0 disables
};

/// Adam over a parameter list. Moments live on the Parameters themselves so checkpoints carry
/// them; the step counter lives here.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update from the accumulated gradients. Returns false and leaves every parameter
  /// untouched when any gradient entry is non-finite (the incident is logged).
  bool step(const std::vector<Parameter*>& params);

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
};

/// Binary checkpoint: magic "HCNN", format version, shape, Adam step count, then every parameter
/// as name + rows + cols + row-major values + first and second moments. Little-endian.
void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const Adam& opt);
/// Throws ConfigError on a bad magic, unsupported version or truncated file.
void load_checkpoint(const std::filesystem::path& path, Mlp& net, Adam& opt);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace hcraft::nn
