#include "hcraft/nn/tape.hpp"

#include <cmath>

#include "hcraft/common/errors.hpp"

namespace hcraft::nn {

Parameter::Parameter(std::string n, Matrix init) : name(std::move(n)), value(std::move(init)) {
  grad = Matrix::Zero(value.rows(), value.cols());
  m = Matrix::Zero(value.rows(), value.cols());
  v = Matrix::Zero(value.rows(), value.cols());
}

const Matrix& Var::value() const {
  if (tape == nullptr) throw ContractViolation("unbound tape variable");
  return tape->value(*this);
}

void Tape::check(const Var& v) const {
  if (v.tape != this || v.generation != generation_ || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractViolation("variable does not belong to the current tape recording");
  }
}

const Matrix& Tape::value(const Var& v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Matrix& Tape::grad(const Var& v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Var Tape::push(Matrix value, Backward backward) {
  nodes_.push_back({std::move(value), Matrix(), std::move(backward)});
  return Var{this, static_cast<int>(nodes_.size() - 1), generation_};
}

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::parameter(Parameter& p) {
  return push(p.value, [&p](const Matrix& g, Tape&) {
    if (p.grad.rows() != g.rows() || p.grad.cols() != g.cols()) p.grad = Matrix::Zero(g.rows(), g.cols());
    p.grad += g;
  });
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw ContractViolation("backward called without a recorded forward pass");
  check(loss);
  const auto& lv = nodes_[static_cast<std::size_t>(loss.id)].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractViolation("backward needs a scalar loss");
  for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<std::size_t>(loss.id)].grad(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward) n.backward(n.grad, *this);
  }
}

void Tape::clear() {
  nodes_.clear();
  ++generation_;
}

namespace {

void same_shape(const Var& a, const Var& b, const char* op) {
  a.tape->check(a);
  a.tape->check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul: inner dimensions differ");
  Tape& t = *a.tape;
  t.check(b);
  const int ia = a.id, ib = b.id;
  return t.push(a.value() * b.value(), [ia, ib](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia).noalias() += g * tp.value_at(ib).transpose();
    tp.grad_ref(ib).noalias() += tp.value_at(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value() + b.value(), [ia, ib](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia) += g;
    tp.grad_ref(ib) += g;
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value() - b.value(), [ia, ib](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia) += g;
    tp.grad_ref(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value().cwiseProduct(b.value()), [ia, ib](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia) += g.cwiseProduct(tp.value_at(ib));
    tp.grad_ref(ib) += g.cwiseProduct(tp.value_at(ia));
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ContractViolation("add_row: row shape mismatch");
  const int ia = a.id, ir = row.id;
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->push(std::move(out), [ia, ir](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia) += g;
    tp.grad_ref(ir) += g.colwise().sum();
  });
}

Var scale(Var a, double s) {
  const int ia = a.id;
  return a.tape->push(a.value() * s, [ia, s](const Matrix& g, Tape& tp) { tp.grad_ref(ia) += g * s; });
}

Var add_scalar(Var a, double s) {
  const int ia = a.id;
  return a.tape->push(a.value().array() + s, [ia](const Matrix& g, Tape& tp) { tp.grad_ref(ia) += g; });
}

Var tanh(Var a) {
  const int ia = a.id;
  Matrix out = a.value().array().tanh();
  const int io = static_cast<int>(a.tape->size());
  return a.tape->push(std::move(out), [ia, io](const Matrix& g, Tape& tp) {
    const Matrix& y = tp.value_at(io);
    tp.grad_ref(ia).array() += g.array() * (1.0 - y.array().square());
  });
}

Var exp(Var a) {
  const int ia = a.id;
  const int io = static_cast<int>(a.tape->size());
  return a.tape->push(a.value().array().exp(), [ia, io](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia).array() += g.array() * tp.value_at(io).array();
  });
}

Var square(Var a) {
  const int ia = a.id;
  return a.tape->push(a.value().array().square(), [ia](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia).array() += 2.0 * g.array() * tp.value_at(ia).array();
  });
}

Var clamp(Var a, double lo, double hi) {
  const int ia = a.id;
  return a.tape->push(a.value().cwiseMax(lo).cwiseMin(hi), [ia, lo, hi](const Matrix& g, Tape& tp) {
    const Matrix& x = tp.value_at(ia);
    tp.grad_ref(ia).array() += (x.array() > lo && x.array() < hi).cast<double>() * g.array();
  });
}

Var minimum(Var a, Var b) {
  same_shape(a, b, "minimum");
  const int ia = a.id, ib = b.id;
  return a.tape->push(a.value().cwiseMin(b.value()), [ia, ib](const Matrix& g, Tape& tp) {
    const auto first = (tp.value_at(ia).array() <= tp.value_at(ib).array()).cast<double>();
    tp.grad_ref(ia).array() += first * g.array();
    tp.grad_ref(ib).array() += (1.0 - first) * g.array();
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ContractViolation("slice_cols out of range");
  const int ia = a.id;
  return a.tape->push(a.value().middleCols(start, count), [ia, start, count](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia).middleCols(start, count) += g;
  });
}

Var log_softmax_rows(Var a) {
  const int ia = a.id;
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse = mx + std::log((x.row(r).array() - mx).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  const int io = static_cast<int>(a.tape->size());
  return a.tape->push(std::move(out), [ia, io](const Matrix& g, Tape& tp) {
    const Matrix p = tp.value_at(io).array().exp();
    const Eigen::VectorXd gs = g.rowwise().sum();
    tp.grad_ref(ia) += g - (p.array().colwise() * gs.array()).matrix();
  });
}

Var gather_cols(Var a, const std::vector<int>& index) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) throw ContractViolation("gather_cols: index size mismatch");
  Matrix out(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= a.cols()) throw ContractViolation("gather_cols: index out of range");
    out(r, 0) = a.value()(r, c);
  }
  const int ia = a.id;
  return a.tape->push(std::move(out), [ia, index](const Matrix& g, Tape& tp) {
    Matrix& ga = tp.grad_ref(ia);
    for (std::size_t r = 0; r < index.size(); ++r) ga(static_cast<Eigen::Index>(r), index[r]) += g(static_cast<Eigen::Index>(r), 0);
  });
}

Var sum_rows(Var a) {
  const int ia = a.id;
  return a.tape->push(a.value().rowwise().sum(), [ia](const Matrix& g, Tape& tp) {
    tp.grad_ref(ia).colwise() += g.col(0);
  });
}

Var sum(Var a) {
  const int ia = a.id;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->push(std::move(out), [ia](const Matrix& g, Tape& tp) { tp.grad_ref(ia).array() += g(0, 0); });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ContractViolation("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

}  // namespace hcraft::nn
