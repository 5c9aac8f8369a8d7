#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hcraft/ppo/ppo.hpp"

namespace hcraft::testgen {

using ppo::Transition;

// Brute-force oracle: flatten every decision into its frames and average n-step returns with
// lambda^(n-1) weights; the tail weight goes to the return that runs to the horizon.
inline double lambda_return_oracle(const std::vector<Transition>& ts, double bootstrap, std::size_t t, double gamma,
                            double lambda) {
  std::size_t end = t;
  while (end < ts.size() && !ts[end].done) ++end;
  const bool terminal = end < ts.size();
  const std::size_t horizon = terminal ? end + 1 : ts.size();
  auto n_step = [&](std::size_t n) {
    double g = 0.0;
    double disc = 1.0;
    for (std::size_t j = t; j < t + n; ++j) {
      for (double r : ts[j].frame_rewards) {
        g += disc * r;
        disc *= gamma;
      }
    }
    const std::size_t next = t + n;
    double v = 0.0;
    if (next < horizon) v = ts[next].value;
    else if (!terminal) v = bootstrap;
    return g + disc * v;
  };
  const std::size_t total = horizon - t;
  double out = 0.0;
  for (std::size_t n = 1; n < total; ++n) out += (1.0 - lambda) * std::pow(lambda, static_cast<double>(n - 1)) * n_step(n);
  out += std::pow(lambda, static_cast<double>(total - 1)) * n_step(total);
  return out;
}

inline std::vector<Transition> random_episode(std::mt19937_64& rng, int length, bool terminal) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> frames(1, 4);
  std::vector<Transition> ts(static_cast<std::size_t>(length));
  for (auto& t : ts) {
    t.frames_consumed = frames(rng);
    for (int k = 0; k < t.frames_consumed; ++k) t.frame_rewards.push_back(u(rng));
    t.reward = std::accumulate(t.frame_rewards.begin(), t.frame_rewards.end(), 0.0);
    t.value = u(rng);
  }
  ts.back().done = terminal;
  return ts;
}

/// Largest |advantage - oracle| over `episodes` random episodes of length 1..12, mixing
/// terminal and truncated endings and the gamma/lambda corner values.
inline double gae_worst_error(int episodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  double worst = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    const double gamma = ep % 10 == 0 ? 1.0 : 0.5 + 0.5 * u01(rng);
    const double lambda = ep % 7 == 0 ? 1.0 : (ep % 11 == 0 ? 0.0 : u01(rng));
    const bool terminal = ep % 3 != 0;
    const auto ts = random_episode(rng, len(rng), terminal);
    const double bootstrap = terminal ? 0.0 : u01(rng) * 4.0 - 2.0;
    const auto out = ppo::gae(ts, bootstrap, gamma, lambda);
    for (std::size_t t = 0; t < ts.size(); ++t) {
      worst = std::max(worst, std::abs(out.advantages[t] - (lambda_return_oracle(ts, bootstrap, t, gamma, lambda) - ts[t].value)));
      worst = std::max(worst, std::abs(out.returns[t] - (out.advantages[t] + ts[t].value)));
    }
  }
  return worst;
}

}  // namespace hcraft::testgen
