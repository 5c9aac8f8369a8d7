#include "hcraft/nn/mlp.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "hcraft/common/errors.hpp"

namespace hcraft::nn {

int MlpShape::total_logits() const { return std::accumulate(head_dims.begin(), head_dims.end(), 0); }

namespace {

Matrix normal_init(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = g(rng);
  }
  return m;
}

}  // namespace

Mlp::Mlp(MlpShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.input_dim <= 0 || shape_.hidden_dim <= 0 || shape_.head_dims.empty()) {
    throw ContractViolation("network needs positive input/hidden sizes and at least one head");
  }
  for (int d : shape_.head_dims) {
    if (d <= 0) throw ContractViolation("head cardinality must be positive");
  }
  std::mt19937_64 rng(seed);
  const int in = shape_.input_dim, h = shape_.hidden_dim, k = shape_.total_logits();
  w1_ = Parameter("trunk.w1", normal_init(in, h, 1.0 / std::sqrt(in), rng));
  b1_ = Parameter("trunk.b1", Matrix::Zero(1, h));
  w2_ = Parameter("trunk.w2", normal_init(h, h, 1.0 / std::sqrt(h), rng));
  b2_ = Parameter("trunk.b2", Matrix::Zero(1, h));
  wp_ = Parameter("policy.w", normal_init(h, k, 0.01 / std::sqrt(h), rng));
  bp_ = Parameter("policy.b", Matrix::Zero(1, k));
  wv_ = Parameter("value.w", normal_init(h, 1, 1.0 / std::sqrt(h), rng));
  bv_ = Parameter("value.b", Matrix::Zero(1, 1));
}

TapeOutputs Mlp::forward(Tape& tape, const Matrix& x) {
  if (x.cols() != shape_.input_dim) {
    throw ContractViolation("observation width " + std::to_string(x.cols()) + " != input_dim " +
                            std::to_string(shape_.input_dim));
  }
  Var in = tape.constant(x);
  Var h1 = tanh(add_row(matmul(in, tape.parameter(w1_)), tape.parameter(b1_)));
  Var h2 = tanh(add_row(matmul(h1, tape.parameter(w2_)), tape.parameter(b2_)));
  Var all = add_row(matmul(h2, tape.parameter(wp_)), tape.parameter(bp_));
  TapeOutputs out;
  Eigen::Index start = 0;
  for (int d : shape_.head_dims) {
    out.logits.push_back(slice_cols(all, start, d));
    start += d;
  }
  out.value = add_row(matmul(h2, tape.parameter(wv_)), tape.parameter(bv_));
  return out;
}

Inference Mlp::infer(const Eigen::VectorXd& obs) const {
  if (obs.size() != shape_.input_dim) throw ContractViolation("observation width does not match input_dim");
  const Eigen::RowVectorXd h1 = ((obs.transpose() * w1_.value) + b1_.value).array().tanh();
  const Eigen::RowVectorXd h2 = ((h1 * w2_.value) + b2_.value).array().tanh();
  const Eigen::RowVectorXd all = h2 * wp_.value + bp_.value;
  Inference out;
  Eigen::Index start = 0;
  for (int d : shape_.head_dims) {
    out.logits.emplace_back(all.segment(start, d).transpose());
    start += d;
  }
  out.value = (h2 * wv_.value)(0, 0) + bv_.value(0, 0);
  return out;
}

std::vector<Parameter*> Mlp::parameters() { return {&w1_, &b1_, &w2_, &b2_, &wp_, &bp_, &wv_, &bv_}; }

std::vector<const Parameter*> Mlp::parameters() const {
  return {&w1_, &b1_, &w2_, &b2_, &wp_, &bp_, &wv_, &bv_};
}

void Mlp::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

bool Mlp::all_finite() const {
  for (const auto* p : parameters()) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (!(a.shape_ == b.shape_)) return false;
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->value != pb[i]->value) return false;
  }
  return true;
}

bool Adam::step(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const auto* p : params) {
    if (!p->grad.allFinite()) {
      spdlog::warn("optimizer: non-finite gradient in {}, update rejected", p->name);
      return false;
    }
    sq += p->grad.squaredNorm();
  }
  double factor = 1.0;
  const double norm = std::sqrt(sq);
  if (cfg_.max_grad_norm > 0.0 && norm > cfg_.max_grad_norm) factor = cfg_.max_grad_norm / norm;
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto* p : params) {
    const Matrix g = p->grad * factor;
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * g;
    p->v = cfg_.beta2 * p->v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p->value.array() -= cfg_.lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + cfg_.eps);
  }
  return true;
}

namespace {

constexpr char kMagic[4] = {'H', 'C', 'N', 'N'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("checkpoint truncated");
  return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(os, m(r, c));
  }
}

void get_matrix(std::istream& is, Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(is);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Mlp& net, const Adam& opt) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint " + tmp);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kCheckpointVersion);
    const auto& s = net.shape();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.input_dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.hidden_dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.head_dims.size()));
    for (int d : s.head_dims) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    put<std::uint64_t>(os, opt.steps());
    const auto params = net.parameters();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
      os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
      put<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.rows()));
      put<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.cols()));
      put_matrix(os, p->value);
      put_matrix(os, p->m);
      put_matrix(os, p->v);
    }
    if (!os) throw ConfigError("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::filesystem::path& path, Mlp& net, Adam& opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a network checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  MlpShape shape;
  shape.input_dim = static_cast<int>(get<std::uint32_t>(is));
  shape.hidden_dim = static_cast<int>(get<std::uint32_t>(is));
  const auto heads = get<std::uint32_t>(is);
  if (heads > 64) throw ConfigError("checkpoint declares too many heads");
  for (std::uint32_t i = 0; i < heads; ++i) shape.head_dims.push_back(static_cast<int>(get<std::uint32_t>(is)));
  const auto steps = get<std::uint64_t>(is);
  Mlp loaded(shape, 0);
  const auto params = loaded.parameters();
  if (get<std::uint32_t>(is) != params.size()) throw ConfigError("checkpoint parameter count mismatch");
  for (auto* p : params) {
    const auto len = get<std::uint32_t>(is);
    if (len > 256) throw ConfigError("checkpoint parameter name too long");
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto rows = get<std::uint32_t>(is), cols = get<std::uint32_t>(is);
    if (!is || name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw ConfigError("checkpoint parameter '" + name + "' does not match the network layout");
    }
    get_matrix(is, p->value);
    get_matrix(is, p->m);
    get_matrix(is, p->v);
  }
  net = std::move(loaded);
  opt.set_steps(steps);
}

}  // namespace hcraft::nn
