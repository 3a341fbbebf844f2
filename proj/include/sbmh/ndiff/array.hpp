#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace sbmh {

/// Dense row-major matrix of doubles. Batched quantities put the batch along
/// the rows, so a batch of N points in R^d is an N x d Array.
using Array = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Every random stream in the project is one of these.
using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed for stream `stream` from a base seed
/// (splitmix64 finalizer over the pair).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline bool all_finite(const Array& a) { return a.allFinite(); }

inline std::string shape_string(const Array& a) {
  return "(" + std::to_string(a.rows()) + ", " + std::to_string(a.cols()) + ")";
}

}  // namespace sbmh

namespace sbmh::ndiff {

// Scalar activations and their closed-form derivatives.

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

inline double sigmoid_prime(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

inline double sigmoid_second(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Exact erf form of GELU.
inline double gelu(double x) { return x * std_normal_cdf(x); }
inline double gelu_prime(double x) { return std_normal_cdf(x) + x * std_normal_pdf(x); }
inline double gelu_second(double x) { return std_normal_pdf(x) * (2.0 - x * x); }

}  // namespace sbmh::ndiff
