#include "sbmh/ndiff/nets.hpp"

#include "sbmh/error.hpp"

#include <cmath>
#include <type_traits>

namespace sbmh::ndiff {

namespace {

Array apply_elementwise(const Array& x, double (*f)(double)) { return x.unaryExpr(f); }

BoundParams bind_layers(Graph& g, const std::vector<Dense>& layers) {
  BoundParams p;
  p.layers.reserve(layers.size());
  for (const Dense& d : layers) {
    p.layers.push_back({g.parameter(d.weight), g.parameter(d.bias)});
  }
  return p;
}

Var apply_dense(Graph& g, const BoundDense& d, Var x) {
  return g.add_bias(g.linear(x, d.weight), d.bias);
}

template <class Layers>
auto collect_parameters(Layers& layers) {
  using Ptr = std::conditional_t<std::is_const_v<Layers>, const Array*, Array*>;
  std::vector<Ptr> out;
  out.reserve(layers.size() * 2);
  for (auto& d : layers) {
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  return out;
}

}  // namespace

Array Dense::apply(const Array& x) const {
  Array y(x.rows(), weight.rows());
  y.noalias() = x * weight.transpose();
  y.rowwise() += bias.row(0);
  return y;
}

void Dense::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias.data()[i] = u(rng);
}

std::vector<Var> BoundParams::vars() const {
  std::vector<Var> out;
  out.reserve(layers.size() * 2);
  for (const BoundDense& d : layers) {
    out.push_back(d.weight);
    out.push_back(d.bias);
  }
  return out;
}

// ---------------------------------------------------------------- ScoreNet

ScoreNet::ScoreNet(int dim, int hidden, int hidden_layers)
    : dim_(dim), hidden_(hidden), hidden_layers_(hidden == 0 ? 0 : hidden_layers) {
  if (dim < 1) throw ArgumentError("ScoreNet: dim must be >= 1");
  if (hidden < 0 || hidden_layers < 0) throw ArgumentError("ScoreNet: negative width or depth");
  if (hidden == 0) {
    layers_.emplace_back(dim, dim);
    return;
  }
  layers_.emplace_back(dim, hidden);
  for (int i = 0; i < hidden_layers_; ++i) layers_.emplace_back(hidden, hidden);
  layers_.emplace_back(hidden, dim);
}

void ScoreNet::initialize(Rng& rng) {
  for (Dense& d : layers_) d.initialize(rng);
}

std::vector<Array*> ScoreNet::parameters() { return collect_parameters(layers_); }
std::vector<const Array*> ScoreNet::parameters() const { return collect_parameters(layers_); }

void ScoreNet::check_input(const Array& x) const {
  if (x.cols() != dim_) {
    throw DimensionError("ScoreNet: expected " + std::to_string(dim_) + " columns, got " +
                         shape_string(x));
  }
}

Array ScoreNet::forward(const Array& x) const {
  check_input(x);
  Array h = x;
  const std::size_t last = layers_.size() - 1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].apply(h);
    if (i < last) h = apply_elementwise(h, &ndiff::softplus);
  }
  return h;
}

Array ScoreNet::jvp(const Array& x, const Array& v) const {
  check_input(x);
  check_input(v);
  if (x.rows() != v.rows()) throw DimensionError("ScoreNet::jvp: row count mismatch");
  Array h = x;
  Array t = v;
  const std::size_t last = layers_.size() - 1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Array z = layers_[i].apply(h);
    Array tz(t.rows(), layers_[i].out());
    tz.noalias() = t * layers_[i].weight.transpose();
    if (i < last) {
      t = tz.cwiseProduct(apply_elementwise(z, &ndiff::sigmoid));
      h = apply_elementwise(z, &ndiff::softplus);
    } else {
      t = std::move(tz);
    }
  }
  return t;
}

Array ScoreNet::jacobian(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("ScoreNet::jacobian: wrong point dimension");
  const Array points = x.transpose().replicate(dim_, 1);
  const Array directions = Array::Identity(dim_, dim_);
  // Row j of the product is J e_j, i.e. column j of J.
  return jvp(points, directions).transpose();
}

BoundParams ScoreNet::bind(Graph& g) const { return bind_layers(g, layers_); }

ScoreNet::Trace ScoreNet::forward(Graph& g, const BoundParams& p, Var x) const {
  check_input(g.value(x));
  Trace t;
  Var h = x;
  const std::size_t last = layers_.size() - 1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Var z = apply_dense(g, p.layers[i], h);
    if (i < last) {
      t.pre.push_back(z);
      h = g.softplus(z);
    } else {
      t.output = z;
    }
  }
  return t;
}

Var ScoreNet::jvp(Graph& g, const BoundParams& p, const Trace& t, Var v) const {
  check_input(g.value(v));
  Var tan = v;
  const std::size_t last = layers_.size() - 1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    tan = g.linear(tan, p.layers[i].weight);
    if (i < last) tan = g.mul(tan, g.sigmoid(t.pre[i]));
  }
  return tan;
}

Var ScoreNet::vjp(Graph& g, const BoundParams& p, const Trace& t, Var g_out) const {
  Var cot = g_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    cot = g.matmul(cot, p.layers[i].weight);
    if (i > 0) cot = g.mul(cot, g.sigmoid(t.pre[i - 1]));
  }
  return cot;
}

// ----------------------------------------------------------- AcceptanceNet

AcceptanceNet::AcceptanceNet(int dim, int hidden, int blocks)
    : dim_(dim), hidden_(hidden), blocks_(blocks) {
  if (dim < 1 || hidden < 1 || blocks < 0) {
    throw ArgumentError("AcceptanceNet: need dim >= 1, hidden >= 1, blocks >= 0");
  }
  layers_.emplace_back(2 * dim, hidden);
  for (int k = 0; k < blocks; ++k) {
    layers_.emplace_back(hidden, hidden);
    layers_.emplace_back(hidden, hidden);
  }
  layers_.emplace_back(hidden, 1);
}

void AcceptanceNet::initialize(Rng& rng) {
  for (Dense& d : layers_) d.initialize(rng);
}

std::vector<Array*> AcceptanceNet::parameters() { return collect_parameters(layers_); }
std::vector<const Array*> AcceptanceNet::parameters() const { return collect_parameters(layers_); }

void AcceptanceNet::check_input(const Array& input) const {
  if (input.cols() != 2 * dim_) {
    throw DimensionError("AcceptanceNet: expected " + std::to_string(2 * dim_) +
                         " columns, got " + shape_string(input));
  }
}

Array AcceptanceNet::join(const Array& to, const Array& from) {
  if (to.rows() != from.rows() || to.cols() != from.cols()) {
    throw DimensionError("AcceptanceNet::join: " + shape_string(to) + " vs " + shape_string(from));
  }
  Array u(to.rows(), to.cols() * 2);
  u << to, from;
  return u;
}

Array AcceptanceNet::logit(const Array& input) const {
  check_input(input);
  Array h = apply_elementwise(layers_[0].apply(input), &ndiff::gelu);
  for (int k = 0; k < blocks_; ++k) {
    const Dense& inner = layers_[1 + 2 * k];
    const Dense& outer = layers_[2 + 2 * k];
    h += outer.apply(apply_elementwise(inner.apply(h), &ndiff::gelu));
  }
  return layers_.back().apply(apply_elementwise(h, &ndiff::gelu));
}

Array AcceptanceNet::forward(const Array& input) const {
  return apply_elementwise(logit(input), &ndiff::sigmoid);
}

Vector AcceptanceNet::log_acceptance(const Array& to, const Array& from) const {
  return apply_elementwise(logit(join(to, from)), &ndiff::log_sigmoid).col(0);
}

Array AcceptanceNet::logit_input_gradient(const Array& input) const {
  check_input(input);
  const Array z0 = layers_[0].apply(input);
  Array h = apply_elementwise(z0, &ndiff::gelu);
  std::vector<Array> inner_pre;
  inner_pre.reserve(static_cast<std::size_t>(blocks_));
  for (int k = 0; k < blocks_; ++k) {
    inner_pre.push_back(layers_[1 + 2 * k].apply(h));
    h += layers_[2 + 2 * k].apply(apply_elementwise(inner_pre.back(), &ndiff::gelu));
  }
  const Dense& head = layers_.back();
  Array g = Array(input.rows(), hidden_);
  g.rowwise() = head.weight.row(0);
  g = g.cwiseProduct(apply_elementwise(h, &ndiff::gelu_prime));
  for (int k = blocks_; k-- > 0;) {
    Array gu = g * layers_[2 + 2 * k].weight;
    gu = gu.cwiseProduct(apply_elementwise(inner_pre[static_cast<std::size_t>(k)],
                                           &ndiff::gelu_prime));
    g.noalias() += gu * layers_[1 + 2 * k].weight;
  }
  g = g.cwiseProduct(apply_elementwise(z0, &ndiff::gelu_prime));
  return g * layers_[0].weight;
}

BoundParams AcceptanceNet::bind(Graph& g) const { return bind_layers(g, layers_); }

AcceptanceNet::Trace AcceptanceNet::forward(Graph& g, const BoundParams& p, Var input) const {
  check_input(g.value(input));
  Trace t;
  Var z0 = apply_dense(g, p.layers[0], input);
  t.pre.push_back(z0);
  Var h = g.gelu(z0);
  t.hidden.push_back(h);
  for (int k = 0; k < blocks_; ++k) {
    Var pk = apply_dense(g, p.layers[static_cast<std::size_t>(1 + 2 * k)], h);
    t.pre.push_back(pk);
    h = g.add(h, apply_dense(g, p.layers[static_cast<std::size_t>(2 + 2 * k)], g.gelu(pk)));
    t.hidden.push_back(h);
  }
  t.pre.push_back(h);
  t.logit = apply_dense(g, p.layers.back(), g.gelu(h));
  return t;
}

Var AcceptanceNet::logit_vjp(Graph& g, const BoundParams& p, const Trace& t, Var g_logit) const {
  Var cot = g.matmul(g_logit, p.layers.back().weight);
  cot = g.mul(cot, g.gelu_prime(t.pre.back()));
  for (int k = blocks_; k-- > 0;) {
    const auto ku = static_cast<std::size_t>(k);
    Var gu = g.matmul(cot, p.layers[2 + 2 * ku].weight);
    Var gp = g.mul(gu, g.gelu_prime(t.pre[1 + ku]));
    cot = g.add(cot, g.matmul(gp, p.layers[1 + 2 * ku].weight));
  }
  cot = g.mul(cot, g.gelu_prime(t.pre.front()));
  return g.matmul(cot, p.layers.front().weight);
}

// ------------------------------------------------------------ free helpers

InputGradient input_gradient(const AcceptanceNet& net, const Array& input) {
  InputGradient r;
  BoundParams p = net.bind(r.graph);
  r.params = p.vars();
  r.input = r.graph.constant(input);
  auto trace = net.forward(r.graph, p, r.input);
  r.output = r.graph.sigmoid(trace.logit);
  // da/dlogit = sigmoid'(logit), then pull back through the network.
  Var seed = r.graph.sigmoid_prime(trace.logit);
  r.gradient = net.logit_vjp(r.graph, p, trace, seed);
  return r;
}

InputGradient input_gradient(const ScoreNet& net, const Array& input, const Array& direction) {
  InputGradient r;
  BoundParams p = net.bind(r.graph);
  r.params = p.vars();
  r.input = r.graph.constant(input);
  auto trace = net.forward(r.graph, p, r.input);
  r.output = trace.output;
  r.gradient = net.jvp(r.graph, p, trace, r.graph.constant(direction));
  return r;
}

}  // namespace sbmh::ndiff
