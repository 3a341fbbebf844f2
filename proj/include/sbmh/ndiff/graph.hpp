#pragma once

#include "sbmh/ndiff/array.hpp"

#include <cstddef>
#include <vector>

namespace sbmh::ndiff {

/// Handle to a node of a Graph.
struct Var {
  int id = -1;
};

/// Reverse-mode tape over 2-D arrays.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and `backward` is a single reverse sweep. Derivatives of
/// activations are themselves node kinds (sigmoid for softplus', gelu' for
/// GELU), which is what lets an input-gradient computation built out of nodes
/// be differentiated again with respect to the parameters.
class Graph {
 public:
  enum class Op {
    constant,
    parameter,
    add,
    sub,
    mul,
    scale,
    add_bias,     // X + 1 b, b is 1 x m
    linear,       // X W^T
    matmul,       // G W
    softplus,
    sigmoid,
    sigmoid_prime,
    gelu,
    gelu_prime,
    log_sigmoid,
    square,
    clamp,        // elementwise clamp to [-c, c]
    sum,          // -> 1 x 1
    row_sum,      // -> N x 1
    mul_col,      // X (N x m) times column c (N x 1), broadcast along columns
    slice,        // rows [r0, r0+nr), cols [c0, c0+nc)
    concat_cols,
    concat_rows,
  };

  Var constant(Array value);
  Var parameter(Array value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_bias(Var x, Var bias);
  Var linear(Var x, Var weight);
  Var matmul(Var g, Var weight);
  Var softplus(Var x);
  Var sigmoid(Var x);
  Var sigmoid_prime(Var x);
  Var gelu(Var x);
  Var gelu_prime(Var x);
  Var log_sigmoid(Var x);
  Var square(Var x);
  Var clamp(Var x, double c);
  Var sum(Var x);
  Var mean(Var x);
  Var row_sum(Var x);
  Var mul_col(Var x, Var column);
  Var slice(Var x, Eigen::Index row0, Eigen::Index rows, Eigen::Index col0, Eigen::Index cols);
  Var cols(Var x, Eigen::Index col0, Eigen::Index cols);
  Var rows(Var x, Eigen::Index row0, Eigen::Index rows);
  Var concat_cols(Var a, Var b);
  Var concat_rows(Var a, Var b);

  const Array& value(Var v) const { return nodes_.at(index(v)).value; }
  double scalar(Var v) const;

  /// Gradient of the last `backward` root with respect to `v`; zeros if the
  /// node did not influence the root.
  Array grad(Var v) const;

  /// Reverse sweep from a 1 x 1 root. Visits each node at most once, in
  /// reverse insertion order, and only nodes that depend on a parameter.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double s = 0.0;
    Eigen::Index i0 = 0, i1 = 0;
    bool needs_grad = false;
    Array value;
    Array grad;
  };

  std::size_t index(Var v) const;
  Var push(Op op, int a, int b, Array value, double s = 0.0);
  template <class Expr>
  void accumulate_expr(int id, const Expr& g);

  std::vector<Node> nodes_;
};

}  // namespace sbmh::ndiff
