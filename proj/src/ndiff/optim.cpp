#include "sbmh/ndiff/optim.hpp"

#include "sbmh/error.hpp"

#include <cmath>

namespace sbmh::ndiff {

void adam_step(const std::vector<Array*>& params, const std::vector<Array>& grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Array* p : params) {
      state.first_moment.push_back(Array::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Array::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols()) {
      throw DimensionError("adam_step: gradient " + shape_string(grads[i]) + " for parameter " +
                           shape_string(*params[i]));
    }
    if (!grads[i].allFinite()) throw TrainingError("adam_step: non-finite gradient");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& m = state.first_moment[i];
    Array& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i].cwiseAbs2();
    const double lr = state.learning_rate;
    const double eps = state.eps;
    params[i]->array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

Array clip_gradients(const Array& g, double threshold) {
  if (!(threshold > 0.0)) throw ArgumentError("clip_gradients: threshold must be positive");
  return g.cwiseMax(-threshold).cwiseMin(threshold);
}

void clip_gradients_in_place(std::vector<Array>& grads, double threshold) {
  for (Array& g : grads) g = clip_gradients(g, threshold);
}

}  // namespace sbmh::ndiff
