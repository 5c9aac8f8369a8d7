#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hcraft/nn/mlp.hpp"

namespace hcraft::testgen {

using nn::Matrix;
using nn::Mlp;
using nn::MlpShape;
using nn::Tape;
using nn::Var;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  }
  return m;
}

struct LossSpec {
  Matrix x;
  std::vector<std::vector<int>> picks;  // per head, per row
  Matrix weights;                       // N x 1 advantage-like weights
  Matrix targets;                       // N x 1 value targets
};

/// A PPO-shaped scalar: clipped ratio surrogate, entropy and value error over every head.
inline Var build_loss(Tape& tape, Mlp& net, const LossSpec& spec) {
  auto out = net.forward(tape, spec.x);
  Var w = tape.constant(spec.weights);
  Var total = tape.constant(Matrix::Zero(1, 1));
  for (std::size_t h = 0; h < out.logits.size(); ++h) {
    Var lp = log_softmax_rows(out.logits[h]);
    Var chosen = gather_cols(lp, spec.picks[h]);
    Var ratio = exp(add_scalar(chosen, 0.3));
    Var surr = minimum(mul(ratio, w), mul(clamp(ratio, 0.8, 1.2), w));
    Var ent = sum_rows(mul(exp(lp), lp));
    total = add(total, sub(mean(surr), scale(mean(ent), 0.01)));
  }
  Var verr = square(sub(out.value, tape.constant(spec.targets)));
  return add(total, scale(mean(verr), 0.5));
}

inline double eval_loss(Mlp& net, const LossSpec& spec) {
  Tape t;
  return build_loss(t, net, spec).value()(0, 0);
}

struct GradCheckResult {
  double worst_relative_error = 0.0;
  std::string worst_where;
};

/// Analytic gradients of a PPO-shaped loss against central finite differences on `trials`
/// random networks; relative error floored at 1e-6 in the denominator.
inline GradCheckResult check_gradients(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto dim = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  GradCheckResult res;
  for (int trial = 0; trial < trials; ++trial) {
    MlpShape shape{dim(1, 5), dim(1, 6), {}};
    for (int h = dim(1, 3); h > 0; --h) shape.head_dims.push_back(dim(1, 4));
    Mlp net(shape, static_cast<std::uint64_t>(trial));
    for (auto* p : net.parameters()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng, 0.8);
    const int n = dim(1, 4);
    LossSpec spec{random_matrix(n, shape.input_dim, rng), {}, random_matrix(n, 1, rng), random_matrix(n, 1, rng)};
    for (int d : shape.head_dims) {
      std::vector<int> picks;
      for (int r = 0; r < n; ++r) picks.push_back(dim(0, d - 1));
      spec.picks.push_back(picks);
    }
    net.zero_grad();
    {
      Tape t;
      t.backward(build_loss(t, net, spec));
    }
    for (auto* p : net.parameters()) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        const double orig = p->value(i);
        const double eps = 1e-5;
        p->value(i) = orig + eps;
        const double up = eval_loss(net, spec);
        p->value(i) = orig - eps;
        const double down = eval_loss(net, spec);
        p->value(i) = orig;
        const double numeric = (up - down) / (2 * eps);
        const double analytic = p->grad(i);
        const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        if (rel > res.worst_relative_error) {
          res.worst_relative_error = rel;
          res.worst_where = "trial " + std::to_string(trial) + " " + p->name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return res;
}

}  // namespace hcraft::testgen
