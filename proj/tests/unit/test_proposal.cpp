#include <doctest.h>

#include "../support/finite_diff.hpp"
#include "sbmh/data/targets.hpp"
#include "sbmh/error.hpp"
#include "sbmh/proposal/proposal.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numbers>

using namespace sbmh;
using namespace sbmh::proposal;
using scorematch::ScoreModel;
using sbmh::testing::fd_gradient;

namespace {

ScoreModel normal_score(int d) {
  return ScoreModel::analytic(data::AnalyticTarget::standard_normal(d));
}

// Closed-form Gaussian log density, written out independently.
double gauss_log(const Vector& to, const Vector& mean, double s) {
  const double d = static_cast<double>(to.size());
  return -(to - mean).squaredNorm() / (2 * s * s) - 0.5 * d * std::log(2 * std::numbers::pi * s * s);
}

Array row(std::initializer_list<double> v) {
  Array a(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double e : v) a(0, j++) = e;
  return a;
}

double chi_square_p(const Array& draws, const Array& mean, double s) {
  const int bins = 50;
  std::vector<double> counts(bins, 0.0);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    const double z = (draws(i, 0) - mean(i, 0)) / s;
    const double u = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    counts[std::min(bins - 1, static_cast<int>(u * bins))] += 1;
  }
  const double expected = static_cast<double>(draws.rows()) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), stat));
}

}  // namespace

TEST_CASE("pcn with beta one ignores the current state") {
  const auto k = ProposalKernel::pcn(2, 1.0);
  Rng a(5), b(5);
  Vector x1(2), x2(2);
  x1 << 3.0, -4.0;
  x2 << -100.0, 7.0;
  CHECK(k.propose_point(x1, a) == k.propose_point(x2, b));
  CHECK(k.log_q_point(x1, x1) == k.log_q_point(x1, x2));
}

TEST_CASE("mala with zero score matches rw draws and moments") {
  const auto mala = ProposalKernel::mala(0.3, ScoreModel::zero(2));
  const auto rw = ProposalKernel::rw(2, 0.3);
  const Eigen::Index n = 100000;
  Array from = Array::Zero(n, 2);
  from.col(0).setConstant(1.0);
  Rng r1(6), r2(6);
  const Array a = mala.propose(from, r1);
  const Array b = rw.propose(from, r2);
  CHECK(a == b);
  const double se = 0.3 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(a.col(0).mean() - 1.0) < 3 * se);
  CHECK(std::abs(a.col(1).mean()) < 3 * se);
  const double var = (a.col(1).array() - a.col(1).mean()).square().mean();
  // Sample variance of a Gaussian has sd sigma^2 sqrt(2 / n).
  CHECK(std::abs(var - 0.09) < 3 * 0.09 * std::sqrt(2.0 / n));
}

TEST_CASE("rw proposal mean follows the CLT") {
  const auto k = ProposalKernel::rw(2, 0.1);
  const Eigen::Index n = 100000;
  Rng rng(7);
  const Array d = k.propose(Array::Zero(n, 2), rng);
  CHECK(std::abs(d.col(0).mean()) < 3 * 0.1 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(d.col(1).mean()) < 3 * 0.1 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("per-row streams give per-row draws") {
  const auto k = ProposalKernel::rw(1, 1.0);
  std::vector<Rng> streams{Rng(1), Rng(2)};
  const Array two = k.propose(Array::Zero(2, 1), streams);
  std::vector<Rng> only{Rng(2)};
  CHECK(k.propose(Array::Zero(1, 1), only)(0, 0) == two(1, 0));
  std::vector<Rng> wrong{Rng(1)};
  CHECK_THROWS_AS(k.propose(Array::Zero(2, 1), wrong), DimensionError);
}

TEST_CASE("log q spot values and symmetry") {
  const double s = 0.7;
  const auto rw = ProposalKernel::rw(3, s);
  Vector x(3);
  x << 0.1, 0.2, -0.3;
  CHECK(rw.log_q_point(x, x) ==
        doctest::Approx(-1.5 * std::log(2 * std::numbers::pi * s * s)).epsilon(1e-14));
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Vector a = rw.propose_point(x, rng), b = rw.propose_point(x, rng);
    CHECK(rw.log_q_point(a, b) == rw.log_q_point(b, a));
    CHECK(rw.log_q_point(a, b) == doctest::Approx(gauss_log(a, b, s)).epsilon(1e-13));
  }

  const auto pcn = ProposalKernel::pcn(3, 0.5);
  Vector a(3), b(3);
  a << 1.0, -0.5, 2.0;
  b << -0.3, 0.8, 0.1;
  CHECK(pcn.log_q_point(a, b) != pcn.log_q_point(b, a));
  CHECK(pcn.log_q_point(a, b) == doctest::Approx(gauss_log(a, std::sqrt(0.75) * b, 0.5)).epsilon(1e-13));

  const auto mala = ProposalKernel::mala(0.5, normal_score(1));
  Vector p(1), q(1);
  p << 0.3;
  q << 1.4;
  CHECK(mala.log_q_point(p, q) != mala.log_q_point(q, p));
  CHECK(mala.log_q_point(q, p) ==
        doctest::Approx(gauss_log(q, p * (1 - 0.125), 0.5)).epsilon(1e-13));
}

TEST_CASE("log q integrates to one on a 1D grid") {
  const std::vector<ProposalKernel> kernels = {ProposalKernel::rw(1, 0.4),
                                               ProposalKernel::mala(0.4, normal_score(1)),
                                               ProposalKernel::pcn(1, 0.3)};
  for (const auto& k : kernels) {
    CAPTURE(k.describe());
    Vector from(1);
    from << 0.8;
    const double m = k.mean(Array(from.transpose()))(0, 0);
    const int n = 4001;
    const double lo = m - 12 * k.scale(), hi = m + 12 * k.scale();
    const double h = (hi - lo) / (n - 1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      Vector to(1);
      to << lo + i * h;
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      total += w * std::exp(k.log_q_point(to, from));
    }
    CHECK(std::abs(total * h - 1.0) < 1e-4);
  }
}

TEST_CASE("rw gradient example and pcn mean point") {
  const auto rw = ProposalKernel::rw(2, 1.0);
  const auto g = rw.grad_log_q_pair(row({0.0, 0.0}), row({1.0, 0.0}));
  CHECK(g.forward.d_to(0, 0) == -1.0);
  CHECK(g.forward.d_to(0, 1) == 0.0);

  const auto pcn = ProposalKernel::pcn(2, 0.6);
  const Array x = row({1.5, -2.0});
  const Array xp = std::sqrt(1 - 0.36) * x;
  CHECK(pcn.grad_log_q_pair(x, xp).forward.d_to.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("log q gradient blocks match finite differences") {
  Array cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.5;
  const auto target = data::AnalyticTarget::gaussian(Vector::Zero(2), cov);
  const auto score = ScoreModel::analytic(target);
  const std::vector<ProposalKernel> kernels = {
      ProposalKernel::rw(2, 0.5), ProposalKernel::pcn(2, 0.4), ProposalKernel::mala(0.6, score),
      ProposalKernel::mala(0.6, score, true)};
  Rng rng(9);
  for (const auto& k : kernels) {
    CAPTURE(k.describe());
    for (int t = 0; t < 20; ++t) {
      const Array x = sbmh::testing::random_array(1, 2, rng);
      const Array xp = sbmh::testing::random_array(1, 2, rng);
      const auto g = k.grad_log_q_pair(x, xp);
      const Vector xv = x.row(0).transpose(), xpv = xp.row(0).transpose();
      const bool frozen = k.kind() == Kind::mala && !k.exact_jacobian();
      // Under the stop-gradient convention the drift is held at its value at
      // the base point, so the oracle differentiates with a frozen mean.
      const Vector m_x = k.mean(x).row(0).transpose();
      const Vector m_xp = k.mean(xp).row(0).transpose();
      auto fwd = [&](const Vector& to, const Vector& from) {
        if (!frozen) return k.log_q_point(to, from);
        return gauss_log(to, m_x + (from - xv), k.scale());
      };
      auto rev = [&](const Vector& to, const Vector& from) {
        if (!frozen) return k.log_q_point(to, from);
        return gauss_log(to, m_xp + (from - xpv), k.scale());
      };
      const double h = 1e-6;
      const Vector f_to = fd_gradient([&](const Vector& v) { return fwd(v, xv); }, xpv, h);
      const Vector f_from = fd_gradient([&](const Vector& v) { return fwd(xpv, v); }, xv, h);
      const Vector r_to = fd_gradient([&](const Vector& v) { return rev(v, xpv); }, xv, h);
      const Vector r_from = fd_gradient([&](const Vector& v) { return rev(xv, v); }, xpv, h);
      auto close = [](const Array& got, const Vector& want) {
        return (got.row(0).transpose() - want).norm() / std::max(1.0, want.norm()) < 1e-6;
      };
      CHECK(close(g.forward.d_to, f_to));
      CHECK(close(g.forward.d_from, f_from));
      CHECK(close(g.reverse.d_to, r_to));
      CHECK(close(g.reverse.d_from, r_from));
    }
  }
}

TEST_CASE("proposals pass a chi-square goodness of fit") {
  const std::vector<ProposalKernel> kernels = {ProposalKernel::rw(1, 0.3),
                                               ProposalKernel::mala(0.3, normal_score(1)),
                                               ProposalKernel::pcn(1, 0.2)};
  const Eigen::Index n = 100000;
  for (const auto& k : kernels) {
    CAPTURE(k.describe());
    Rng rng(10);
    const Array from = Array::Constant(n, 1, 1.7);
    const Array draws = k.propose(from, rng);
    CHECK(chi_square_p(draws, k.mean(from), k.scale()) > 0.001);
  }
}

TEST_CASE("proposal argument and shape errors") {
  CHECK_THROWS_AS(ProposalKernel::rw(2, 0.0), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::rw(0, 1.0), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::pcn(2, 0.0), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::pcn(2, 1.5), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::mala(-1.0, normal_score(1)), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::mala(0.1, ScoreModel()), ArgumentError);
  CHECK_THROWS_AS(ProposalKernel::rw(2, 1.0).log_q(Array::Zero(1, 3), Array::Zero(1, 3)),
                  DimensionError);
  CHECK(parse_kind("pcn") == Kind::pcn);
  CHECK_THROWS_AS(parse_kind("hmc"), ArgumentError);
}
