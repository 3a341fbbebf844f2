#pragma once

#include "sbmh/data/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sbmh::data {

struct Gaussian {
  Vector mean;
  Array covariance;

  // Derived from the covariance at construction.
  Array precision;
  Array chol_lower;
  double log_norm = 0.0;  // -(d log 2pi + log det) / 2

  Gaussian(Vector mean, Array covariance);
  static Gaussian isotropic(Vector mean, double variance);
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Gaussian> components;
};

/// Generalized extreme value distribution, shape xi, location mu, scale sigma.
struct Gev {
  double xi = 0.0;
  double mu = 0.0;
  double sigma = 1.0;
};

/// Analytic density with exact log-pdf, score, Hessian and sampler.
class AnalyticTarget {
 public:
  using Params = std::variant<Gaussian, GaussianMixture, Gev>;

  explicit AnalyticTarget(Params params);

  static AnalyticTarget gaussian(Vector mean, Array covariance);
  static AnalyticTarget standard_normal(int dim);
  static AnalyticTarget mixture(std::vector<double> weights, std::vector<Gaussian> components);
  /// pi N((5,5), I) + (1 - pi) N((-5,-5), I).
  static AnalyticTarget two_mode_mixture(double pi);
  static AnalyticTarget gev(double xi, double mu, double sigma);

  int dim() const { return dim_; }
  std::string kind() const;
  const Params& params() const { return params_; }

  bool in_support(const Vector& x) const;
  /// Full normalized log density. Throws SupportError outside the support.
  double logpdf(const Vector& x) const;
  Vector score(const Vector& x) const;
  Array hessian(const Vector& x) const;

  Vector logpdf_batch(const Array& x) const;
  Array score_batch(const Array& x) const;

  /// Univariate CDF (Gaussian and GEV in one dimension only).
  double cdf(double x) const;
  /// Univariate inverse CDF (GEV only, used by the sampler).
  double quantile(double u) const;

  PointCloud sample(Eigen::Index n, std::uint64_t seed) const;

 private:
  void require_support(const Vector& x) const;

  Params params_;
  int dim_ = 0;
};

}  // namespace sbmh::data
