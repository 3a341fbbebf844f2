#pragma once

#include "sbmh/data/point_cloud.hpp"

#include <cstdint>

namespace sbmh::data {

/// Two interleaved half circles: the upper unit arc and the lower arc
/// shifted to (1, 0.5), each point on an evenly spaced parameter grid,
/// shuffled, plus isotropic N(0, noise^2). Labels: 0 upper, 1 lower.
PointCloud make_moons(Eigen::Index n, double noise, std::uint64_t seed);

/// Pinwheel arms: label y ~ U{0..K-1}, r ~ N(1, radial_std^2),
/// delta ~ N(0, tangential_std^2), phi = 2 pi y / K + rate * r,
/// point = (r cos phi + delta, r sin phi + delta).
PointCloud make_pinwheel(Eigen::Index n, int classes, double radial_std, double tangential_std,
                         double rate, std::uint64_t seed);

/// (sin t, y, sign(t)(cos t - 1)), t ~ U[-3pi/2, 3pi/2], y ~ U[0, 2].
PointCloud make_s_curve(Eigen::Index n, double noise, std::uint64_t seed);

/// (t cos t, y, t sin t), t ~ U[1.5pi, 4.5pi], y ~ U[0, 21].
PointCloud make_swiss_roll(Eigen::Index n, double noise, std::uint64_t seed);

}  // namespace sbmh::data
