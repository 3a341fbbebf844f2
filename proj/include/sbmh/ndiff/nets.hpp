#pragma once

#include "sbmh/ndiff/array.hpp"
#include "sbmh/ndiff/graph.hpp"

#include <vector>

namespace sbmh::ndiff {

/// Fully connected layer y = x W^T + b with W stored out x in.
struct Dense {
  Array weight;
  Array bias;

  Dense() = default;
  Dense(Eigen::Index in, Eigen::Index out)
      : weight(Array::Zero(out, in)), bias(Array::Zero(1, out)) {}

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }

  Array apply(const Array& x) const;
  /// Kaiming-style uniform fan-in init: U(-1/sqrt(in), 1/sqrt(in)) for both.
  void initialize(Rng& rng);
};

struct BoundDense {
  Var weight;
  Var bias;
};

/// Parameters of a network registered on a Graph, in `parameters()` order.
struct BoundParams {
  std::vector<BoundDense> layers;

  std::vector<Var> vars() const;
};

/// Score network: dim -> hidden -> (hidden -> hidden) x hidden_layers -> dim,
/// Softplus after every layer but the last. hidden == 0 degenerates to a
/// single affine map dim -> dim (the linear score family).
class ScoreNet {
 public:
  ScoreNet() = default;
  ScoreNet(int dim, int hidden, int hidden_layers = 2);

  void initialize(Rng& rng);

  int dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int hidden_layers() const { return hidden_layers_; }

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Array*> parameters();
  std::vector<const Array*> parameters() const;

  /// Batched evaluation, N x dim -> N x dim.
  Array forward(const Array& x) const;
  /// Jacobian-vector products J(x_i) v_i, row by row.
  Array jvp(const Array& x, const Array& v) const;
  /// Full Jacobian at one point, J(i, j) = d s_i / d x_j.
  Array jacobian(const Vector& x) const;

  struct Trace {
    std::vector<Var> pre;  // pre-activations of the activated layers
    Var output;
  };

  BoundParams bind(Graph& g) const;
  Trace forward(Graph& g, const BoundParams& p, Var x) const;
  /// Forward-mode tangent of the output along v, expressed as graph nodes.
  Var jvp(Graph& g, const BoundParams& p, const Trace& t, Var v) const;
  /// Cotangent pulled back to the input, expressed as graph nodes.
  Var vjp(Graph& g, const BoundParams& p, const Trace& t, Var g_out) const;

 private:
  void check_input(const Array& x) const;

  int dim_ = 0;
  int hidden_ = 0;
  int hidden_layers_ = 0;
  std::vector<Dense> layers_;
};

/// Acceptance network on the concatenation (x_to, x_from) in R^{2 dim}.
///
///   h_0 = GELU(Dense_in(u))
///   h_k = h_{k-1} + Dense_outer_k(GELU(Dense_inner_k(h_{k-1})))
///   logit = Dense_head(GELU(h_K)),   a = sigmoid(logit)
class AcceptanceNet {
 public:
  AcceptanceNet() = default;
  AcceptanceNet(int dim, int hidden, int blocks);

  void initialize(Rng& rng);

  int dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int blocks() const { return blocks_; }

  /// Layer order: input, (inner_1, outer_1), ..., (inner_K, outer_K), head.
  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Array*> parameters();
  std::vector<const Array*> parameters() const;

  static Array join(const Array& to, const Array& from);

  /// Pre-sigmoid output, N x 2dim -> N x 1.
  Array logit(const Array& input) const;
  /// a(x_to, x_from) in (0, 1), N x 1.
  Array forward(const Array& input) const;
  /// log a(x_to, x_from) computed as log-sigmoid of the logit.
  Vector log_acceptance(const Array& to, const Array& from) const;
  /// d logit / d input, N x 2dim.
  Array logit_input_gradient(const Array& input) const;

  struct Trace {
    std::vector<Var> pre;  // GELU inputs: input layer, each inner layer, h_K
    std::vector<Var> hidden;
    Var logit;
  };

  BoundParams bind(Graph& g) const;
  Trace forward(Graph& g, const BoundParams& p, Var input) const;
  /// Pulls a cotangent on the logit (N x 1) back to the input (N x 2dim).
  Var logit_vjp(Graph& g, const BoundParams& p, const Trace& t, Var g_logit) const;

 private:
  void check_input(const Array& input) const;

  int dim_ = 0;
  int hidden_ = 0;
  int blocks_ = 0;
  std::vector<Dense> layers_;
};

/// An input-gradient computation recorded as graph nodes so that it can be
/// differentiated again with respect to the network parameters.
struct InputGradient {
  Graph graph;
  std::vector<Var> params;
  Var input;
  Var output;
  Var gradient;

  const Array& value() const { return graph.value(gradient); }
};

/// Gradient of a(x_to, x_from) with respect to the 2dim input, per row.
InputGradient input_gradient(const AcceptanceNet& net, const Array& input);

/// Jacobian-vector product of the score network along `direction`, per row.
InputGradient input_gradient(const ScoreNet& net, const Array& input, const Array& direction);

}  // namespace sbmh::ndiff
