#pragma once

#include "sbmh/ndiff/array.hpp"

#include <cstdint>
#include <vector>

namespace sbmh::ndiff {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Array> first_moment;
  std::vector<Array> second_moment;

  explicit AdamState(double lr = 1e-3) : learning_rate(lr) {}
};

/// One bias-corrected Adam update in place. Moments are allocated on the
/// first call to match the parameter shapes. Throws TrainingError on a
/// non-finite gradient.
void adam_step(const std::vector<Array*>& params, const std::vector<Array>& grads,
               AdamState& state);

/// Element-wise clamp of every component to [-threshold, threshold].
Array clip_gradients(const Array& g, double threshold);
void clip_gradients_in_place(std::vector<Array>& grads, double threshold);

}  // namespace sbmh::ndiff
