#pragma once

#include "sbmh/data/targets.hpp"
#include "sbmh/ndiff/nets.hpp"

#include <functional>
#include <memory>
#include <string>

namespace sbmh::scorematch {

/// x -> s(x) approximating grad log p. Backed by a trained ScoreNet, by an
/// analytic target, or by a plain function (used in tests and experiments).
/// Copies share the underlying backend, which is never mutated.
class ScoreModel {
 public:
  using BatchFn = std::function<Array(const Array&)>;
  using JacobianFn = std::function<Array(const Vector&)>;

  ScoreModel() = default;

  static ScoreModel network(ndiff::ScoreNet net);
  static ScoreModel analytic(data::AnalyticTarget target);
  /// `jacobian` may be empty, in which case central differences are used.
  static ScoreModel callable(int dim, BatchFn fn, JacobianFn jacobian = {});
  static ScoreModel zero(int dim);

  int dim() const { return dim_; }
  std::string backend() const;
  bool valid() const { return dim_ > 0; }

  /// N x d -> N x d.
  Array evaluate(const Array& x) const;
  Vector evaluate(const Vector& x) const;
  /// J(i, j) = d s_i / d x_j at one point.
  Array jacobian(const Vector& x) const;
  /// Rows J(x_i) v_i.
  Array jvp(const Array& x, const Array& v) const;

  const ndiff::ScoreNet* net() const { return net_.get(); }
  const data::AnalyticTarget* target() const { return target_.get(); }

 private:
  int dim_ = 0;
  std::shared_ptr<const ndiff::ScoreNet> net_;
  std::shared_ptr<const data::AnalyticTarget> target_;
  BatchFn fn_;
  JacobianFn jac_;
};

}  // namespace sbmh::scorematch
