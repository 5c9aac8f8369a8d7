#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace hcraft::nn {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;

  Parameter() = default;
  Parameter(std::string n, Matrix init);
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a tape. Invalidated by Tape::clear().
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  std::uint64_t generation = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recorder over dense matrices. Every op appends a node; backward() walks them in
/// reverse and deposits gradients into the Parameters that were registered as leaves.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// loss must be a 1x1 node of this tape. Throws ContractViolation otherwise or when nothing
  /// was recorded since the last clear().
  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(const Var& v) const;
  const Matrix& grad(const Var& v) const;

  // Internal: used by the op functions below.
  using Backward = std::function<void(const Matrix& out_grad, Tape& tape)>;
  Var push(Matrix value, Backward backward);
  Matrix& grad_ref(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Matrix& value_at(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  void check(const Var& v) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::uint64_t generation_ = 1;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
/// Adds a 1xC row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);
/// Elementwise clamp; gradient flows only where the input lies strictly inside [lo, hi].
Var clamp(Var a, double lo, double hi);
/// Elementwise minimum; ties send the gradient to the first argument.
Var minimum(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Row-wise numerically stable log-softmax.
Var log_softmax_rows(Var a);
/// Picks column index[r] from each row r, giving an Nx1 column.
Var gather_cols(Var a, const std::vector<int>& index);
Var sum_rows(Var a);  // N x C -> N x 1
Var sum(Var a);       // -> 1 x 1
Var mean(Var a);      // -> 1 x 1

}  // namespace hcraft::nn
