// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Usage: acceptance_tests [--only N[,N...]] [--out DIR]

#include "../support/finite_diff.hpp"
#include "sbmh/accept/accept.hpp"
#include "sbmh/cli/pipelines.hpp"
#include "sbmh/data/targets.hpp"
#include "sbmh/metrics/metrics.hpp"
#include "sbmh/ndiff/nets.hpp"
#include "sbmh/sampler/sampler.hpp"
#include "sbmh/scorematch/scorematch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace sbmh;
using sbmh::testing::fd_gradient;
using sbmh::testing::fd_parameter_gradient;
using sbmh::testing::random_array;
using sbmh::testing::relative_error;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

fs::path g_out;

cli::PipelineOptions pipeline_options(const std::string& name) {
  cli::PipelineOptions opt;
  opt.out_dir = g_out / name;
  opt.seed = 0;
  opt.svg = false;
  return opt;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// 1. ULA is biased toward the balanced start; exact MH finds the weights.
Verdict mixture_bias() {
  const auto r = cli::reproduce_fig1(pipeline_options("c1"));
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    const double w = r.weights[i][0];
    const bool in = r.methods[i] == "ula" ? (w >= 0.40 && w <= 0.62) : (w >= 0.75 && w <= 0.85);
    ok = ok && in;
    d += r.methods[i] + " " + num(w) + " ";
  }
  return {ok, d + "(ula in [0.40,0.62], rw/mala in [0.75,0.85])"};
}

// 2. Exact ratio acceptance has zero score-balance residual.
Verdict exact_residual() {
  Array cov(2, 2);
  cov << 1.0, 0.4, 0.4, 0.6;
  Vector mean(2);
  mean << 0.2, -0.1;
  const auto target = data::AnalyticTarget::gaussian(mean, cov);
  const auto score = scorematch::ScoreModel::analytic(target);
  double worst = 0.0;
  for (const auto& k : {proposal::ProposalKernel::rw(2, 0.6), proposal::ProposalKernel::pcn(2, 0.5)}) {
    auto log_a = [&](const Vector& to, const Vector& from) {
      return std::min(0.0, target.logpdf(to) + k.log_q_point(from, to) - target.logpdf(from) -
                               k.log_q_point(to, from));
    };
    accept::LogAcceptanceGrad grad = [&](const Array& to, const Array& from) {
      Array g(to.rows(), 4);
      for (Eigen::Index i = 0; i < to.rows(); ++i) {
        Vector z(4);
        z << to.row(i).transpose(), from.row(i).transpose();
        g.row(i) = fd_gradient([&](const Vector& v) { return log_a(v.head(2), v.tail(2)); }, z, 1e-6)
                       .transpose();
      }
      return g;
    };
    Rng rng(2);
    int tested = 0;
    while (tested < 100) {
      const Array x = random_array(1, 2, rng), xp = random_array(1, 2, rng);
      // Stay away from the kink of min{1, r}.
      if (std::abs(accept::exact_log_ratio(target, k, xp, x)[0]) < 1e-3) continue;
      ++tested;
      worst = std::max(worst, accept::sbm_residual(grad, score, k, x, xp).norm());
    }
  }
  return {worst < 1e-6, "max residual norm " + num(worst) + " (< 1e-6)"};
}

// 3. a/5 keeps N(0,1) stationary and cuts the acceptance rate about 5x.
Verdict scaled_acceptance() {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto rw = proposal::ProposalKernel::rw(1, 2.4);
  const auto exact = accept::AcceptanceModel::exact(n01, rw);
  sampler::RunConfig cfg;
  cfg.n_chains = 1000;
  cfg.n_steps = 5200;
  cfg.burn_in = 200;
  cfg.thin = 50;
  cfg.seed = 3;
  const auto base = sampler::run_chains(sampler::Transition::mh(rw, exact), cfg);
  const auto slow = sampler::run_chains(sampler::Transition::mh(rw, exact.scaled(5.0)), cfg);
  const Vector s = slow.samples.points.col(0);
  const double p = metrics::ks_pvalue(metrics::ks_statistic(s, phi), s.size());
  const double ratio = base.acceptance_rate() / slow.acceptance_rate();
  return {p > 0.001 && ratio > 4.0 && ratio < 6.0 && s.size() == 100000,
          "KS p " + num(p) + " on " + std::to_string(s.size()) + " states, rate ratio " + num(ratio)};
}

// 4. Flux balance on a 101-point grid.
Verdict grid_balance() {
  const auto target = data::AnalyticTarget::standard_normal(1);
  const auto rw = proposal::ProposalKernel::rw(1, 1.0);
  const auto a = accept::AcceptanceModel::exact(target, rw);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      Vector x(1), y(1);
      x << -4.0 + 0.08 * i;
      y << -4.0 + 0.08 * j;
      const double fwd = std::exp(target.logpdf(x) + rw.log_q_point(y, x)) * a.acceptance_point(y, x);
      const double bwd = std::exp(target.logpdf(y) + rw.log_q_point(x, y)) * a.acceptance_point(x, y);
      worst = std::max(worst, std::abs(fwd - bwd));
    }
  }
  return {worst < 1e-10, "max flux imbalance " + num(worst)};
}

// 5. Sliced score matching recovers s(x) = -x.
Verdict score_recovery() {
  Rng rng(5);
  const Array x = scorematch::standard_normal(10000, 2, rng);
  scorematch::SMConfig cfg;
  cfg.method = scorematch::Method::sliced;
  cfg.epochs = 2000;
  cfg.seed = 5;
  const auto r = scorematch::train_score(data::PointCloud(x), cfg);
  const double err = (r.model.evaluate(r.heldout) + r.heldout).rowwise().squaredNorm().mean();
  return {err < 0.05, "held-out mean |s(x) + x|^2 = " + num(err)};
}

// 6. Entropy regularization lifts the grid acceptance.
Verdict entropy_lift() {
  const auto r = cli::reproduce_fig4(pipeline_options("c6"), {0.0, 2.0}, 200);
  const double gain = r.mean_acceptance[1] - r.mean_acceptance[0];
  return {gain >= 0.2, "grid mean a: lambda 0 " + num(r.mean_acceptance[0]) + ", lambda 2 " +
                           num(r.mean_acceptance[1]) + " (gain " + num(gain) + ", need >= 0.2)"};
}

// 7. Table 1 orderings on moons and pinwheel.
Verdict table_ordering() {
  auto opt = pipeline_options("c7");
  opt.datasets = {"moons", "pinwheel"};
  const auto t = cli::reproduce_table1(
      opt, {cli::Method::ula, cli::Method::score_rw, cli::Method::score_mala});
  const double mu = t.find("moons", "ula")->w1, mm = t.find("moons", "score-mala")->w1;
  const double pu = t.find("pinwheel", "ula")->w1, pr = t.find("pinwheel", "score-rw")->w1;
  return {mm <= 0.5 * mu && pr < pu, "moons W1 mala " + num(mm) + " vs 0.5*ula " + num(0.5 * mu) +
                                         "; pinwheel W1 rw " + num(pr) + " vs ula " + num(pu)};
}

// 8. Taylor-1 averaging is exact on Gaussians; plain Taylor-1 error is O(t^2) on -x^4.
Verdict taylor() {
  Array cov(2, 2);
  cov << 1.0, 0.4, 0.4, 0.6;
  const auto target = data::AnalyticTarget::gaussian(Vector::Zero(2), cov);
  const auto score = scorematch::ScoreModel::analytic(target);
  const auto rw = proposal::ProposalKernel::rw(2, 0.5);
  Rng rng(8);
  const Array x = random_array(100, 2, rng), xp = random_array(100, 2, rng);
  const double gauss = (accept::taylor_log_ratio(score, rw, xp, x, accept::Kind::taylor1_avg) -
                        accept::exact_log_ratio(target, rw, xp, x))
                           .cwiseAbs()
                           .maxCoeff();
  const auto quartic = scorematch::ScoreModel::callable(
      1, [](const Array& v) { return Array(-4.0 * v.array().cube()); });
  const auto rw1 = proposal::ProposalKernel::rw(1, 1.0);
  auto err = [&](double t) {
    const double x0 = 1.0;
    const double exact = -std::pow(x0 + t, 4) + std::pow(x0, 4);
    return std::abs(accept::taylor_log_ratio(quartic, rw1, Array::Constant(1, 1, x0 + t),
                                             Array::Constant(1, 1, x0), accept::Kind::taylor1)[0] -
                    exact);
  };
  const double ratio = err(0.1) / err(0.05);
  return {gauss < 1e-8 && std::abs(ratio - 4.0) <= 0.8,
          "gaussian max error " + num(gauss) + ", quartic halving ratio " + num(ratio) + " (4 +- 20%)"};
}

// 9. GEV inverse-CDF sampling.
Verdict gev() {
  double worst = 0.0;
  for (double xi : {0.0, 0.25, 0.5}) {
    const auto t = data::AnalyticTarget::gev(xi, 0.0, 1.0);
    const auto c = t.sample(10000, 9);
    const Vector v = c.points.col(0);
    worst = std::max(worst, metrics::ks_statistic(v, [&](double z) { return t.cdf(z); }));
  }
  const double bound = 1.63 / std::sqrt(10000.0);
  return {worst < bound, "max KS statistic " + num(worst) + " (< " + num(bound) + ")"};
}

// 10. Transport distances match brute force; MMD matches the double sum.
Verdict metric_oracles() {
  Rng rng(10);
  std::uniform_int_distribution<int> size(1, 6);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    const Array p = random_array(n, 2, rng), q = random_array(n, 2, rng);
    for (int order : {1, 2}) {
      const Array c = metrics::cost_matrix(p, q, order);
      std::vector<int> perm(static_cast<std::size_t>(n)), best;
      std::iota(perm.begin(), perm.end(), 0);
      double best_cost = std::numeric_limits<double>::infinity();
      do {
        const double cost = metrics::matched_cost(c, perm);
        if (cost < best_cost) {
          best_cost = cost;
          best = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      const double want = std::pow(best_cost / n, 1.0 / order);
      if (metrics::wasserstein(p, q, order, n, 0) != want) ++mismatches;
    }
  }
  double mmd_err = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Array x = random_array(40, 2, rng), y = random_array(35, 2, rng, 1.5);
    const auto r = metrics::mmd_full(x, y, std::nullopt);
    const double h = r.bandwidth;
    auto k = [h](const Array& a, Eigen::Index i, const Array& b, Eigen::Index j) {
      return std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2 * h * h));
    };
    double xx = 0, yy = 0, xy = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.rows(); ++j)
        if (i != j) xx += k(x, i, x, j);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index j = 0; j < y.rows(); ++j)
        if (i != j) yy += k(y, i, y, j);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < y.rows(); ++j) xy += k(x, i, y, j);
    const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
    const double direct = xx / (n * (n - 1)) + yy / (m * (m - 1)) - 2 * xy / (n * m);
    mmd_err = std::max(mmd_err, std::abs(r.raw - direct));
  }
  return {mismatches == 0 && mmd_err < 1e-12,
          std::to_string(mismatches) + " W mismatches in 200, MMD max error " + num(mmd_err)};
}

// 11. Parameter gradients of input-gradient losses vs central differences.
Verdict double_backward() {
  Rng rng(11);
  double worst = 0.0;
  Array cov(2, 2);
  cov << 1.0, 0.4, 0.4, 0.6;
  const auto score = scorematch::ScoreModel::analytic(data::AnalyticTarget::gaussian(Vector::Zero(2), cov));
  for (int t = 0; t < 10; ++t) {
    ndiff::AcceptanceNet net(2, 6, 1 + t % 2);
    net.initialize(rng);
    const auto k = t % 2 ? proposal::ProposalKernel::pcn(2, 0.5) : proposal::ProposalKernel::rw(2, 0.7);
    const Array x = random_array(5, 2, rng), xp = random_array(5, 2, rng);
    ndiff::Graph g;
    const auto p = net.bind(g);
    const auto parts = accept::sbm_loss_graph(g, net, p, score, k, x, xp, 0.7, 100.0);
    g.backward(parts.loss);
    std::vector<Array> got;
    for (auto v : p.vars()) got.push_back(g.grad(v));
    const auto want = fd_parameter_gradient(
        [&] { return accept::sbm_loss(net, score, k, x, xp, 0.7, 100.0); }, net.parameters(), 1e-4);
    worst = std::max(worst, relative_error(got, want));
  }
  for (int t = 0; t < 10; ++t) {
    ndiff::ScoreNet net(2, 8, 2);
    net.initialize(rng);
    const Array x = random_array(6, 2, rng);
    ndiff::Graph g;
    const auto p = net.bind(g);
    g.backward(scorematch::hyvarinen_graph(g, net, p, x));
    std::vector<Array> got;
    for (auto v : p.vars()) got.push_back(g.grad(v));
    const auto want = fd_parameter_gradient(
        [&] { return scorematch::hyvarinen_loss(scorematch::ScoreModel::network(net), x); },
        net.parameters(), 1e-4);
    worst = std::max(worst, relative_error(got, want));
  }
  return {worst < 1e-3, "max relative error " + num(worst) + " over 20 nets"};
}

// 12. Step-size robustness: MALA's W1 varies less than ULA's.
Verdict step_robustness() {
  const auto r = cli::reproduce_fig5(pipeline_options("c12"));
  const double su = cli::StepSweep::spread(r.w1_ula), sm = cli::StepSweep::spread(r.w1_mala);
  std::string d = "W1 ula/mala per step:";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    d += " " + num(r.steps[i]) + ":" + num(r.w1_ula[i]) + "/" + num(r.w1_mala[i]);
  }
  return {sm < su, d + "; spread ula " + num(su) + ", mala " + num(sm)};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_out = fs::temp_directory_path() / "sbmh_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else if (flag == "--out") {
      g_out = argv[i + 1];
    }
  }

  const std::vector<Criterion> all = {
      {1, "mixture weight bias", 120, mixture_bias},
      {2, "exact acceptance zeroes the score-balance residual", 1, exact_residual},
      {3, "scaled acceptance keeps the target", 60, scaled_acceptance},
      {4, "detailed balance on a grid", 1, grid_balance},
      {5, "score matching recovery", 300, score_recovery},
      {6, "entropy regularization", 900, entropy_lift},
      {7, "table ordering at desk scale", 1800, table_ordering},
      {8, "taylor exactness", 1, taylor},
      {9, "GEV sampling", 10, gev},
      {10, "metric oracles", 10, metric_oracles},
      {11, "double backward", 30, double_backward},
      {12, "step-size robustness", 1800, step_robustness},
  };

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << v.detail
              << " | " << num(secs) << " s of " << c.budget_seconds << " s"
              << (in_time ? "" : " (over budget)") << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
