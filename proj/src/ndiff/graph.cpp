#include "sbmh/ndiff/graph.hpp"

#include "sbmh/error.hpp"

#include <utility>

namespace sbmh::ndiff {

namespace {

template <class F>
Array map(const Array& x, F f) {
  return x.unaryExpr(f);
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

}  // namespace

std::size_t Graph::index(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ArgumentError("graph: invalid node handle");
  }
  return static_cast<std::size_t>(v.id);
}

Var Graph::push(Op op, int a, int b, Array value, double s) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.s = s;
  n.needs_grad = op == Op::parameter || (a >= 0 && nodes_[a].needs_grad) ||
                 (b >= 0 && nodes_[b].needs_grad);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Graph::constant(Array value) { return push(Op::constant, -1, -1, std::move(value)); }
Var Graph::parameter(Array value) { return push(Op::parameter, -1, -1, std::move(value)); }

Var Graph::add(Var a, Var b) {
  const Array& x = value(a);
  const Array& y = value(b);
  require_same_shape(x, y, "add");
  return push(Op::add, a.id, b.id, x + y);
}

Var Graph::sub(Var a, Var b) {
  const Array& x = value(a);
  const Array& y = value(b);
  require_same_shape(x, y, "sub");
  return push(Op::sub, a.id, b.id, x - y);
}

Var Graph::mul(Var a, Var b) {
  const Array& x = value(a);
  const Array& y = value(b);
  require_same_shape(x, y, "mul");
  return push(Op::mul, a.id, b.id, x.cwiseProduct(y));
}

Var Graph::scale(Var a, double s) { return push(Op::scale, a.id, -1, value(a) * s, s); }

Var Graph::add_bias(Var x, Var bias) {
  const Array& v = value(x);
  const Array& b = value(bias);
  if (b.rows() != 1 || b.cols() != v.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(b) + " does not fit " + shape_string(v));
  }
  Array out = v;
  out.rowwise() += b.row(0);
  return push(Op::add_bias, x.id, bias.id, std::move(out));
}

Var Graph::linear(Var x, Var weight) {
  const Array& v = value(x);
  const Array& w = value(weight);
  if (v.cols() != w.cols()) {
    throw DimensionError("linear: input " + shape_string(v) + " vs weight " + shape_string(w));
  }
  Array out(v.rows(), w.rows());
  out.noalias() = v * w.transpose();
  return push(Op::linear, x.id, weight.id, std::move(out));
}

Var Graph::matmul(Var g, Var weight) {
  const Array& v = value(g);
  const Array& w = value(weight);
  if (v.cols() != w.rows()) {
    throw DimensionError("matmul: " + shape_string(v) + " vs " + shape_string(w));
  }
  Array out(v.rows(), w.cols());
  out.noalias() = v * w;
  return push(Op::matmul, g.id, weight.id, std::move(out));
}

Var Graph::softplus(Var x) {
  return push(Op::softplus, x.id, -1, map(value(x), [](double t) { return ndiff::softplus(t); }));
}

Var Graph::sigmoid(Var x) {
  return push(Op::sigmoid, x.id, -1, map(value(x), [](double t) { return ndiff::sigmoid(t); }));
}

Var Graph::sigmoid_prime(Var x) {
  return push(Op::sigmoid_prime, x.id, -1,
              map(value(x), [](double t) { return ndiff::sigmoid_prime(t); }));
}

Var Graph::gelu(Var x) {
  return push(Op::gelu, x.id, -1, map(value(x), [](double t) { return ndiff::gelu(t); }));
}

Var Graph::gelu_prime(Var x) {
  return push(Op::gelu_prime, x.id, -1,
              map(value(x), [](double t) { return ndiff::gelu_prime(t); }));
}

Var Graph::log_sigmoid(Var x) {
  return push(Op::log_sigmoid, x.id, -1,
              map(value(x), [](double t) { return ndiff::log_sigmoid(t); }));
}

Var Graph::square(Var x) { return push(Op::square, x.id, -1, value(x).array().square().matrix()); }

Var Graph::clamp(Var x, double c) {
  if (!(c > 0.0)) throw ArgumentError("clamp: threshold must be positive");
  return push(Op::clamp, x.id, -1, value(x).cwiseMax(-c).cwiseMin(c), c);
}

Var Graph::sum(Var x) {
  Array out(1, 1);
  out(0, 0) = value(x).sum();
  return push(Op::sum, x.id, -1, std::move(out));
}

Var Graph::mean(Var x) {
  const auto n = static_cast<double>(value(x).size());
  return scale(sum(x), 1.0 / n);
}

Var Graph::row_sum(Var x) {
  Array out = value(x).rowwise().sum();
  return push(Op::row_sum, x.id, -1, std::move(out));
}

Var Graph::mul_col(Var x, Var column) {
  const Array& v = value(x);
  const Array& c = value(column);
  if (c.cols() != 1 || c.rows() != v.rows()) {
    throw DimensionError("mul_col: column " + shape_string(c) + " vs " + shape_string(v));
  }
  Array out = v.array().colwise() * c.col(0).array();
  return push(Op::mul_col, x.id, column.id, std::move(out));
}

Var Graph::slice(Var x, Eigen::Index row0, Eigen::Index rows, Eigen::Index col0,
                 Eigen::Index cols) {
  const Array& v = value(x);
  if (row0 < 0 || col0 < 0 || rows < 0 || cols < 0 || row0 + rows > v.rows() ||
      col0 + cols > v.cols()) {
    throw DimensionError("slice: block out of range for " + shape_string(v));
  }
  Array out = v.block(row0, col0, rows, cols);
  Var r = push(Op::slice, x.id, -1, std::move(out));
  nodes_.back().i0 = row0;
  nodes_.back().i1 = col0;
  return r;
}

Var Graph::cols(Var x, Eigen::Index col0, Eigen::Index n) {
  return slice(x, 0, value(x).rows(), col0, n);
}

Var Graph::rows(Var x, Eigen::Index row0, Eigen::Index n) {
  return slice(x, row0, n, 0, value(x).cols());
}

Var Graph::concat_cols(Var a, Var b) {
  const Array& x = value(a);
  const Array& y = value(b);
  if (x.rows() != y.rows()) throw DimensionError("concat_cols: row count mismatch");
  Array out(x.rows(), x.cols() + y.cols());
  out << x, y;
  return push(Op::concat_cols, a.id, b.id, std::move(out));
}

Var Graph::concat_rows(Var a, Var b) {
  const Array& x = value(a);
  const Array& y = value(b);
  if (x.cols() != y.cols()) throw DimensionError("concat_rows: column count mismatch");
  Array out(x.rows() + y.rows(), x.cols());
  out << x, y;
  return push(Op::concat_rows, a.id, b.id, std::move(out));
}

double Graph::scalar(Var v) const {
  const Array& x = value(v);
  if (x.size() != 1) throw DimensionError("scalar: node is " + shape_string(x));
  return x(0, 0);
}

Array Graph::grad(Var v) const {
  const Node& n = nodes_.at(index(v));
  if (n.grad.size() == 0) return Array::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <class Expr>
void Graph::accumulate_expr(int id, const Expr& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad.resize(n.value.rows(), n.value.cols());
    n.grad.noalias() = g;
  } else {
    n.grad.noalias() += g;
  }
}

void Graph::backward(Var root) {
  const std::size_t r = index(root);
  if (nodes_[r].value.size() != 1) {
    throw DimensionError("backward: root must be 1 x 1, got " + shape_string(nodes_[r].value));
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[r].needs_grad) return;
  nodes_[r].grad = Array::Ones(1, 1);

  for (std::size_t k = r + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    const Array& g = n.grad;
    const int a = n.a;
    const int b = n.b;
    auto val = [this](int id) -> const Array& { return nodes_[static_cast<std::size_t>(id)].value; };

    switch (n.op) {
      case Op::constant:
      case Op::parameter:
        break;
      case Op::add:
        accumulate_expr(a, g);
        accumulate_expr(b, g);
        break;
      case Op::sub:
        accumulate_expr(a, g);
        accumulate_expr(b, -g);
        break;
      case Op::mul:
        accumulate_expr(a, g.cwiseProduct(val(b)));
        accumulate_expr(b, g.cwiseProduct(val(a)));
        break;
      case Op::scale:
        accumulate_expr(a, n.s * g);
        break;
      case Op::add_bias:
        accumulate_expr(a, g);
        accumulate_expr(b, g.colwise().sum());
        break;
      case Op::linear:
        accumulate_expr(a, g * val(b));
        accumulate_expr(b, g.transpose() * val(a));
        break;
      case Op::matmul:
        accumulate_expr(a, g * val(b).transpose());
        accumulate_expr(b, val(a).transpose() * g);
        break;
      case Op::softplus:
        accumulate_expr(a, g.cwiseProduct(map(val(a), [](double t) { return ndiff::sigmoid(t); })));
        break;
      case Op::sigmoid:
        accumulate_expr(
            a, g.cwiseProduct(map(val(a), [](double t) { return ndiff::sigmoid_prime(t); })));
        break;
      case Op::sigmoid_prime:
        accumulate_expr(
            a, g.cwiseProduct(map(val(a), [](double t) { return ndiff::sigmoid_second(t); })));
        break;
      case Op::gelu:
        accumulate_expr(a,
                        g.cwiseProduct(map(val(a), [](double t) { return ndiff::gelu_prime(t); })));
        break;
      case Op::gelu_prime:
        accumulate_expr(
            a, g.cwiseProduct(map(val(a), [](double t) { return ndiff::gelu_second(t); })));
        break;
      case Op::log_sigmoid:
        accumulate_expr(
            a, g.cwiseProduct(map(val(a), [](double t) { return ndiff::sigmoid(-t); })));
        break;
      case Op::square:
        accumulate_expr(a, 2.0 * g.cwiseProduct(val(a)));
        break;
      case Op::clamp: {
        const double c = n.s;
        accumulate_expr(a, g.binaryExpr(val(a), [c](double gv, double x) {
          return std::abs(x) <= c ? gv : 0.0;
        }));
        break;
      }
      case Op::sum: {
        const Array& x = val(a);
        accumulate_expr(a, Array::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case Op::row_sum: {
        const Array& x = val(a);
        accumulate_expr(a, g.col(0).replicate(1, x.cols()));
        break;
      }
      case Op::mul_col:
        accumulate_expr(a, Array(g.array().colwise() * val(b).col(0).array()));
        accumulate_expr(b, Array(g.cwiseProduct(val(a)).rowwise().sum()));
        break;
      case Op::slice: {
        Node& in = nodes_[static_cast<std::size_t>(a)];
        if (!in.needs_grad) break;
        if (in.grad.size() == 0) in.grad = Array::Zero(in.value.rows(), in.value.cols());
        in.grad.block(n.i0, n.i1, g.rows(), g.cols()) += g;
        break;
      }
      case Op::concat_cols: {
        const Eigen::Index ca = val(a).cols();
        accumulate_expr(a, g.leftCols(ca));
        accumulate_expr(b, g.rightCols(g.cols() - ca));
        break;
      }
      case Op::concat_rows: {
        const Eigen::Index ra = val(a).rows();
        accumulate_expr(a, g.topRows(ra));
        accumulate_expr(b, g.bottomRows(g.rows() - ra));
        break;
      }
    }
  }
}

}  // namespace sbmh::ndiff
