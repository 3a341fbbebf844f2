#include "sbmh/data/targets.hpp"

#include "sbmh/error.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace sbmh::data {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double gaussian_logpdf(const Gaussian& g, const Vector& x) {
  const Vector diff = x - g.mean;
  return g.log_norm - 0.5 * diff.dot(g.precision * diff);
}

// Posterior component responsibilities at x.
std::vector<double> responsibilities(const GaussianMixture& m, const Vector& x) {
  std::vector<double> logs(m.components.size());
  for (std::size_t k = 0; k < logs.size(); ++k) {
    logs[k] = std::log(m.weights[k]) + gaussian_logpdf(m.components[k], x);
  }
  const double lse = log_sum_exp(logs);
  for (double& v : logs) v = std::exp(v - lse);
  return logs;
}

int dim_of(const AnalyticTarget::Params& p) {
  return std::visit(overloaded{
                        [](const Gaussian& g) { return static_cast<int>(g.mean.size()); },
                        [](const GaussianMixture& m) {
                          return static_cast<int>(m.components.front().mean.size());
                        },
                        [](const Gev&) { return 1; },
                    },
                    p);
}

void validate(const AnalyticTarget::Params& p) {
  std::visit(overloaded{
                 [](const Gaussian&) {},
                 [](const GaussianMixture& m) {
                   if (m.components.empty() || m.components.size() != m.weights.size()) {
                     throw ArgumentError("mixture: need one positive weight per component");
                   }
                   double total = 0.0;
                   for (double w : m.weights) {
                     if (!(w > 0.0)) throw ArgumentError("mixture: weights must be positive");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-9) {
                     throw ArgumentError("mixture: weights must sum to 1");
                   }
                   const auto d = m.components.front().mean.size();
                   for (const Gaussian& g : m.components) {
                     if (g.mean.size() != d) {
                       throw DimensionError("mixture: components differ in dimension");
                     }
                   }
                 },
                 [](const Gev& g) {
                   if (!(g.sigma > 0.0)) throw ArgumentError("gev: sigma must be positive");
                 },
             },
             p);
}

}  // namespace

Gaussian::Gaussian(Vector m, Array cov) : mean(std::move(m)), covariance(std::move(cov)) {
  const auto d = mean.size();
  if (d < 1 || covariance.rows() != d || covariance.cols() != d) {
    throw DimensionError("gaussian: covariance must be d x d for a d-dimensional mean");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw ArgumentError("gaussian: covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError("gaussian: covariance must be positive definite");
  }
  chol_lower = llt.matrixL();
  precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const double log_det = 2.0 * chol_lower.diagonal().array().log().sum();
  log_norm = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
}

Gaussian Gaussian::isotropic(Vector m, double variance) {
  const auto d = m.size();
  return Gaussian(std::move(m), variance * Array::Identity(d, d));
}

AnalyticTarget::AnalyticTarget(Params params) : params_(std::move(params)) {
  validate(params_);
  dim_ = dim_of(params_);
}

AnalyticTarget AnalyticTarget::gaussian(Vector mean, Array covariance) {
  return AnalyticTarget(Gaussian(std::move(mean), std::move(covariance)));
}

AnalyticTarget AnalyticTarget::standard_normal(int dim) {
  return gaussian(Vector::Zero(dim), Array::Identity(dim, dim));
}

AnalyticTarget AnalyticTarget::mixture(std::vector<double> weights,
                                       std::vector<Gaussian> components) {
  return AnalyticTarget(GaussianMixture{std::move(weights), std::move(components)});
}

AnalyticTarget AnalyticTarget::two_mode_mixture(double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw ArgumentError("mixture: pi must lie in (0, 1)");
  return mixture({pi, 1.0 - pi}, {Gaussian::isotropic(Vector::Constant(2, 5.0), 1.0),
                                  Gaussian::isotropic(Vector::Constant(2, -5.0), 1.0)});
}

AnalyticTarget AnalyticTarget::gev(double xi, double mu, double sigma) {
  return AnalyticTarget(Gev{xi, mu, sigma});
}

std::string AnalyticTarget::kind() const {
  return std::visit(overloaded{
                        [](const Gaussian&) { return std::string("gaussian"); },
                        [](const GaussianMixture&) { return std::string("gaussian-mixture"); },
                        [](const Gev&) { return std::string("gev"); },
                    },
                    params_);
}

bool AnalyticTarget::in_support(const Vector& x) const {
  if (x.size() != dim_ || !x.allFinite()) return false;
  if (const auto* g = std::get_if<Gev>(&params_)) {
    if (g->xi == 0.0) return true;
    return 1.0 + g->xi * (x[0] - g->mu) / g->sigma > 0.0;
  }
  return true;
}

void AnalyticTarget::require_support(const Vector& x) const {
  if (x.size() != dim_) {
    throw DimensionError("target: expected dimension " + std::to_string(dim_) + ", got " +
                         std::to_string(x.size()));
  }
  if (!in_support(x)) {
    std::ostringstream os;
    os << "target: point " << x.transpose() << " outside the support of " << kind();
    throw SupportError(os.str());
  }
}

double AnalyticTarget::logpdf(const Vector& x) const {
  require_support(x);
  return std::visit(
      overloaded{
          [&](const Gaussian& g) { return gaussian_logpdf(g, x); },
          [&](const GaussianMixture& m) {
            std::vector<double> logs(m.components.size());
            for (std::size_t k = 0; k < logs.size(); ++k) {
              logs[k] = std::log(m.weights[k]) + gaussian_logpdf(m.components[k], x);
            }
            return log_sum_exp(logs);
          },
          [&](const Gev& g) {
            const double z = (x[0] - g.mu) / g.sigma;
            if (g.xi == 0.0) return -std::log(g.sigma) - z - std::exp(-z);
            const double t = 1.0 + g.xi * z;
            return -std::log(g.sigma) - (1.0 + 1.0 / g.xi) * std::log(t) -
                   std::pow(t, -1.0 / g.xi);
          },
      },
      params_);
}

Vector AnalyticTarget::score(const Vector& x) const {
  require_support(x);
  return std::visit(
      overloaded{
          [&](const Gaussian& g) -> Vector { return -(g.precision * (x - g.mean)); },
          [&](const GaussianMixture& m) -> Vector {
            const auto r = responsibilities(m, x);
            Vector s = Vector::Zero(dim_);
            for (std::size_t k = 0; k < r.size(); ++k) {
              if (r[k] == 0.0) continue;
              s -= r[k] * (m.components[k].precision * (x - m.components[k].mean));
            }
            return s;
          },
          [&](const Gev& g) -> Vector {
            const double z = (x[0] - g.mu) / g.sigma;
            Vector s(1);
            if (g.xi == 0.0) {
              s[0] = (std::exp(-z) - 1.0) / g.sigma;
            } else {
              const double t = 1.0 + g.xi * z;
              s[0] = (-(1.0 + g.xi) / t + std::pow(t, -1.0 / g.xi - 1.0)) / g.sigma;
            }
            return s;
          },
      },
      params_);
}

Array AnalyticTarget::hessian(const Vector& x) const {
  require_support(x);
  return std::visit(
      overloaded{
          [&](const Gaussian& g) -> Array { return -g.precision; },
          [&](const GaussianMixture& m) -> Array {
            const auto r = responsibilities(m, x);
            Array h = Array::Zero(dim_, dim_);
            Vector s = Vector::Zero(dim_);
            for (std::size_t k = 0; k < r.size(); ++k) {
              if (r[k] == 0.0) continue;
              const Vector gk = -(m.components[k].precision * (x - m.components[k].mean));
              h += r[k] * (Array(gk * gk.transpose()) - m.components[k].precision);
              s += r[k] * gk;
            }
            return h - s * s.transpose();
          },
          [&](const Gev& g) -> Array {
            const double z = (x[0] - g.mu) / g.sigma;
            Array h(1, 1);
            if (g.xi == 0.0) {
              h(0, 0) = -std::exp(-z) / (g.sigma * g.sigma);
            } else {
              const double t = 1.0 + g.xi * z;
              h(0, 0) = (g.xi * (1.0 + g.xi) / (t * t) -
                         (1.0 + g.xi) * std::pow(t, -1.0 / g.xi - 2.0)) /
                        (g.sigma * g.sigma);
            }
            return h;
          },
      },
      params_);
}

Vector AnalyticTarget::logpdf_batch(const Array& x) const {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = logpdf(Vector(x.row(i).transpose()));
  return out;
}

Array AnalyticTarget::score_batch(const Array& x) const {
  if (x.cols() != dim_) {
    throw DimensionError("target score: expected " + std::to_string(dim_) + " columns, got " +
                         shape_string(x));
  }
  Array out(x.rows(), x.cols());
  // Fast path for the common Gaussian case.
  if (const auto* g = std::get_if<Gaussian>(&params_)) {
    if (!x.allFinite()) throw SupportError("target score: non-finite point");
    out.noalias() = -((x.rowwise() - g->mean.transpose()) * g->precision);
    return out;
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = score(Vector(x.row(i).transpose()));
  return out;
}

double AnalyticTarget::cdf(double x) const {
  if (dim_ != 1) throw DimensionError("cdf: only defined for one-dimensional targets");
  return std::visit(
      overloaded{
          [&](const Gaussian& g) {
            const double sd = std::sqrt(g.covariance(0, 0));
            return 0.5 * std::erfc(-(x - g.mean[0]) / (sd * std::numbers::sqrt2));
          },
          [&](const GaussianMixture& m) {
            double c = 0.0;
            for (std::size_t k = 0; k < m.weights.size(); ++k) {
              const auto& g = m.components[k];
              const double sd = std::sqrt(g.covariance(0, 0));
              c += m.weights[k] * 0.5 * std::erfc(-(x - g.mean[0]) / (sd * std::numbers::sqrt2));
            }
            return c;
          },
          [&](const Gev& g) {
            const double z = (x - g.mu) / g.sigma;
            if (g.xi == 0.0) return std::exp(-std::exp(-z));
            const double t = 1.0 + g.xi * z;
            if (t <= 0.0) return g.xi > 0.0 ? 0.0 : 1.0;
            return std::exp(-std::pow(t, -1.0 / g.xi));
          },
      },
      params_);
}

double AnalyticTarget::quantile(double u) const {
  const auto* g = std::get_if<Gev>(&params_);
  if (!g) throw ArgumentError("quantile: only implemented for the GEV family");
  if (!(u > 0.0 && u < 1.0)) throw ArgumentError("quantile: u must lie in (0, 1)");
  const double e = -std::log(u);
  if (g->xi == 0.0) return g->mu - g->sigma * std::log(e);
  return g->mu + g->sigma * (std::pow(e, -g->xi) - 1.0) / g->xi;
}

PointCloud AnalyticTarget::sample(Eigen::Index n, std::uint64_t seed) const {
  if (n < 1) throw ArgumentError("sample_target: n must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Array pts(n, dim_);
  auto draw_gaussian = [&](const Gaussian& g) -> Vector {
    Vector z(dim_);
    for (int j = 0; j < dim_; ++j) z[j] = unit(rng);
    return g.mean + g.chol_lower * z;
  };
  std::optional<std::vector<int>> labels;
  if (const auto* g = std::get_if<Gaussian>(&params_)) {
    for (Eigen::Index i = 0; i < n; ++i) pts.row(i) = draw_gaussian(*g).transpose();
  } else if (const auto* m = std::get_if<GaussianMixture>(&params_)) {
    std::vector<double> cum(m->weights.size());
    std::partial_sum(m->weights.begin(), m->weights.end(), cum.begin());
    labels.emplace(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = uni(rng);
      std::size_t k = 0;
      while (k + 1 < cum.size() && u >= cum[k]) ++k;
      (*labels)[static_cast<std::size_t>(i)] = static_cast<int>(k);
      pts.row(i) = draw_gaussian(m->components[k]).transpose();
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      double u = 0.0;
      while (u == 0.0) u = uni(rng);
      pts(i, 0) = quantile(u);
    }
  }
  return PointCloud(std::move(pts), std::move(labels));
}

}  // namespace sbmh::data
