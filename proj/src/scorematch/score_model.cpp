#include "sbmh/scorematch/score_model.hpp"

#include "sbmh/error.hpp"

namespace sbmh::scorematch {

ScoreModel ScoreModel::network(ndiff::ScoreNet net) {
  ScoreModel m;
  m.dim_ = net.dim();
  m.net_ = std::make_shared<const ndiff::ScoreNet>(std::move(net));
  return m;
}

ScoreModel ScoreModel::analytic(data::AnalyticTarget target) {
  ScoreModel m;
  m.dim_ = target.dim();
  m.target_ = std::make_shared<const data::AnalyticTarget>(std::move(target));
  return m;
}

ScoreModel ScoreModel::callable(int dim, BatchFn fn, JacobianFn jacobian) {
  if (dim < 1) throw ArgumentError("score model: dim must be >= 1");
  if (!fn) throw ArgumentError("score model: empty function");
  ScoreModel m;
  m.dim_ = dim;
  m.fn_ = std::move(fn);
  m.jac_ = std::move(jacobian);
  return m;
}

ScoreModel ScoreModel::zero(int dim) {
  return callable(
      dim, [](const Array& x) { return Array::Zero(x.rows(), x.cols()).eval(); },
      [dim](const Vector&) { return Array::Zero(dim, dim).eval(); });
}

std::string ScoreModel::backend() const {
  if (net_) return "network";
  if (target_) return "analytic";
  return "callable";
}

Array ScoreModel::evaluate(const Array& x) const {
  if (x.cols() != dim_) {
    throw DimensionError("score: expected " + std::to_string(dim_) + " columns, got " +
                         shape_string(x));
  }
  if (net_) return net_->forward(x);
  if (target_) return target_->score_batch(x);
  Array out = fn_(x);
  if (out.rows() != x.rows() || out.cols() != x.cols()) {
    throw DimensionError("score: callable returned " + shape_string(out));
  }
  return out;
}

Vector ScoreModel::evaluate(const Vector& x) const {
  return evaluate(Array(x.transpose())).row(0).transpose();
}

Array ScoreModel::jacobian(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("score jacobian: wrong point dimension");
  if (net_) return net_->jacobian(x);
  if (target_) return target_->hessian(x);
  if (jac_) return jac_(x);
  const double h = 1e-5;
  Array j(dim_, dim_);
  Array probe(2 * dim_, dim_);
  for (int k = 0; k < dim_; ++k) {
    probe.row(2 * k) = x.transpose();
    probe.row(2 * k + 1) = x.transpose();
    probe(2 * k, k) += h;
    probe(2 * k + 1, k) -= h;
  }
  const Array s = evaluate(probe);
  for (int k = 0; k < dim_; ++k) {
    j.col(k) = ((s.row(2 * k) - s.row(2 * k + 1)) / (2 * h)).transpose();
  }
  return j;
}

Array ScoreModel::jvp(const Array& x, const Array& v) const {
  if (x.rows() != v.rows() || x.cols() != v.cols()) {
    throw DimensionError("score jvp: direction shape " + shape_string(v) +
                         " does not match points " + shape_string(x));
  }
  if (net_) return net_->jvp(x, v);
  Array out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.row(i) = (jacobian(x.row(i).transpose()) * v.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace sbmh::scorematch
