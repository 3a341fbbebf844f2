#include <doctest.h>

#include "../support/finite_diff.hpp"
#include "sbmh/data/generators.hpp"
#include "sbmh/error.hpp"
#include "sbmh/metrics/metrics.hpp"
#include "sbmh/sampler/sampler.hpp"
#include "sbmh/scorematch/scorematch.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sbmh;
using namespace sbmh::sampler;
using accept::AcceptanceModel;
using proposal::ProposalKernel;
using scorematch::ScoreModel;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double variance(const Array& a) {
  const double m = a.col(0).mean();
  return (a.col(0).array() - m).square().mean();
}

Array balanced_modes(int n) {
  Array init(n, 2);
  for (int i = 0; i < n; ++i) init.row(i).setConstant(i % 2 ? -5.0 : 5.0);
  return init;
}

Array mode_centers() {
  Array m(2, 2);
  m << 5, 5, -5, -5;
  return m;
}

}  // namespace

TEST_CASE("ula step basics") {
  const auto zero = ScoreModel::zero(1);
  Rng rng(1);
  Vector x = Vector::Constant(1, 0.7);
  CHECK(ula_step(zero, x, 0.0, rng) == x);
  CHECK_THROWS_AS(ula_step(zero, x, -0.1, rng), ArgumentError);

  // Pure diffusion: after n steps from 0 the variance is n eps^2.
  const int rows = 20000, n = 10;
  const double eps = 0.3;
  std::vector<Rng> rngs;
  for (int i = 0; i < rows; ++i) rngs.emplace_back(derive_seed(2, i));
  Array a = Array::Zero(rows, 1);
  for (int s = 0; s < n; ++s) a = ula_step_batch(zero, a, eps, rngs);
  const double want = n * eps * eps;
  CHECK(std::abs(variance(a) - want) < 4 * want * std::sqrt(2.0 / rows));
}

TEST_CASE("ula on a standard normal has near-unit variance") {
  const auto score = ScoreModel::analytic(data::AnalyticTarget::standard_normal(1));
  RunConfig cfg;
  cfg.n_chains = 16;
  cfg.n_steps = 100000;
  cfg.seed = 3;
  const auto r = run_chains(Transition::ula(score, 0.1), cfg);
  const double v = variance(r.samples.points);
  // The discretization bias alone would give 1 / (1 - eps^2 / 4).
  CHECK(v > 0.85);
  CHECK(v < 1.15);
  CHECK(r.acceptance_rate() == 1.0);
}

TEST_CASE("mh step acceptance extremes") {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto rw = ProposalKernel::rw(1, 1.0);
  ChainState s;
  s.x = Vector::Zero(1);
  s.rng.seed(4);
  const auto always = AcceptanceModel::constant(1.0, rw);
  for (int i = 0; i < 1000; ++i) CHECK(mh_step(rw, always, s));
  CHECK(s.tally.rejected == 0);
  CHECK(s.step == 1000);

  const auto wide = ProposalKernel::rw(1, 100.0);
  ChainState t;
  t.x = Vector::Zero(1);
  t.rng.seed(5);
  const auto exact = AcceptanceModel::exact(n01, wide);
  for (int i = 0; i < 2000; ++i) mh_step(wide, exact, t);
  CHECK(t.tally.steps() == 2000);
  CHECK(t.tally.rate() < 0.05);
}

TEST_CASE("scaled random walk reaches the classical acceptance rate") {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto rw = ProposalKernel::rw(1, 2.4);
  RunConfig cfg;
  cfg.n_chains = 10;
  cfg.n_steps = 10000;
  cfg.seed = 6;
  const auto r = run_chains(Transition::mh(rw, AcceptanceModel::exact(n01, rw)), cfg);
  CHECK(std::abs(r.acceptance_rate() - 0.44) < 0.03);
}

TEST_CASE("run_chains bookkeeping") {
  const auto n01 = data::AnalyticTarget::standard_normal(2);
  const auto rw = ProposalKernel::rw(2, 0.5);
  const auto t = Transition::mh(rw, AcceptanceModel::exact(n01, rw));
  RunConfig cfg;
  cfg.n_chains = 1;
  cfg.n_steps = 250;
  cfg.burn_in = 0;
  cfg.seed = 7;
  const auto one = run_chains(t, cfg);
  CHECK(one.samples.size() == 250);
  CHECK(one.tallies[0].steps() == 250);
  CHECK((one.samples.points.row(249) == one.final_states.row(0)));
  CHECK(run_chains(t, cfg).samples.points == one.samples.points);

  cfg.burn_in.reset();
  cfg.thin = 4;
  const auto thinned = run_chains(t, cfg);
  CHECK(cfg.resolved_burn_in() == 50);
  CHECK(thinned.samples.size() == 50);
  // Step 51 is the first kept state, then every fourth.
  CHECK((thinned.samples.points.row(0) == one.samples.points.row(50)));
  CHECK((thinned.samples.points.row(1) == one.samples.points.row(54)));

  cfg.burn_in = 250;
  CHECK_THROWS_AS(run_chains(t, cfg), ArgumentError);
  cfg.burn_in = 0;
  cfg.thin = 0;
  CHECK_THROWS_AS(run_chains(t, cfg), ArgumentError);

  // Zero steps echoes the initial cloud.
  Array init(3, 2);
  init << 1, 2, 3, 4, 5, 6;
  RunConfig echo;
  echo.n_chains = 3;
  echo.n_steps = 0;
  echo.init.cloud = init;
  CHECK(run_chains(Transition::ula(ScoreModel::zero(2), 0.1), echo).samples.points == init);
  echo.init.cloud = Array::Zero(3, 3);
  CHECK_THROWS_AS(run_chains(t, echo), DimensionError);
}

TEST_CASE("chain output does not depend on the other chains, blocking or threads") {
  const auto n01 = data::AnalyticTarget::standard_normal(2);
  const auto score = ScoreModel::analytic(n01);
  const auto mala = ProposalKernel::mala(0.8, score);
  const auto t = Transition::mh(mala, AcceptanceModel::exact(n01, mala));
  RunConfig cfg;
  cfg.n_chains = 3;
  cfg.n_steps = 40;
  cfg.burn_in = 10;
  cfg.seed = 8;
  const auto three = run_chains(t, cfg);
  cfg.n_chains = 5;
  cfg.block = 2;
  cfg.jobs = 3;
  const auto five = run_chains(t, cfg);
  CHECK(five.samples.points.topRows(three.samples.size()) == three.samples.points);
  for (int k = 0; k < 3; ++k) {
    CHECK(five.tallies[k].accepted == three.tallies[k].accepted);
    CHECK(five.seeds[k] == three.seeds[k]);
  }
}

TEST_CASE("trace csv") {
  const auto path = std::filesystem::temp_directory_path() / "sbmh_trace_test.csv";
  const auto rw = ProposalKernel::rw(1, 1.0);
  RunConfig cfg;
  cfg.n_chains = 2;
  cfg.n_steps = 5;
  cfg.burn_in = 0;
  cfg.trace = path;
  const auto r = run_chains(Transition::mh(rw, AcceptanceModel::constant(0.5, rw)), cfg);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "chain,step,x0,accepted");
  int rows = 0, accepted = 0;
  while (std::getline(in, line)) {
    ++rows;
    accepted += line.back() == '1';
    if (rows == 6) CHECK(line.rfind("1,1,", 0) == 0);
  }
  CHECK(rows == 10);
  CHECK(accepted == r.tallies[0].accepted + r.tallies[1].accepted);
  std::filesystem::remove(path);
}

TEST_CASE("exact mh preserves a standard normal for every kernel") {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto score = ScoreModel::analytic(n01);
  const std::vector<ProposalKernel> kernels = {ProposalKernel::rw(1, 2.4),
                                               ProposalKernel::mala(1.2, score),
                                               ProposalKernel::pcn(1, 0.5)};
  for (const auto& k : kernels) {
    CAPTURE(k.describe());
    RunConfig cfg;
    cfg.n_chains = 2000;
    cfg.n_steps = 1200;
    cfg.burn_in = 200;
    cfg.thin = 20;
    cfg.seed = 9;
    const auto r = run_chains(Transition::mh(k, AcceptanceModel::exact(n01, k)), cfg);
    REQUIRE(r.samples.size() == 100000);
    const Vector s = r.samples.points.col(0);
    CHECK(metrics::ks_pvalue(metrics::ks_statistic(s, phi), s.size()) > 0.001);
  }
}

TEST_CASE("scaled acceptance keeps the target and divides the acceptance rate") {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto rw = ProposalKernel::rw(1, 2.4);
  const auto exact = AcceptanceModel::exact(n01, rw);
  RunConfig cfg;
  cfg.n_chains = 1000;
  cfg.n_steps = 5200;
  cfg.burn_in = 200;
  cfg.thin = 50;
  cfg.seed = 10;
  const auto base = run_chains(Transition::mh(rw, exact), cfg);
  const auto slow = run_chains(Transition::mh(rw, exact.scaled(5.0)), cfg);
  REQUIRE(slow.samples.size() == 100000);
  const Vector s = slow.samples.points.col(0);
  CHECK(metrics::ks_pvalue(metrics::ks_statistic(s, phi), s.size()) > 0.001);
  const double ratio = base.acceptance_rate() / slow.acceptance_rate();
  CHECK(ratio > 4.0);
  CHECK(ratio < 6.0);
}

TEST_CASE("mixture weights: ula is stuck, exact mh recovers the weights") {
  const auto mix = data::AnalyticTarget::two_mode_mixture(0.8);
  const auto score = ScoreModel::analytic(mix);
  RunConfig cfg;
  cfg.n_chains = 100;
  cfg.n_steps = 12500;
  cfg.seed = 11;
  cfg.init.cloud = balanced_modes(100);
  const auto ula = run_chains(Transition::ula(score, 0.1), cfg);
  REQUIRE(ula.samples.size() == 1000000);
  const double w_ula = metrics::mixture_weights(ula.samples.points, mode_centers())[0];
  CHECK(w_ula >= 0.40);
  CHECK(w_ula <= 0.62);

  const auto rw = ProposalKernel::rw(2, 6.0);
  const auto r_rw = run_chains(Transition::mh(rw, AcceptanceModel::exact(mix, rw)), cfg);
  const double w_rw = metrics::mixture_weights(r_rw.samples.points, mode_centers())[0];
  CHECK(w_rw >= 0.75);
  CHECK(w_rw <= 0.85);

  const auto mala = ProposalKernel::mala(4.5, score);
  const auto r_mala = run_chains(Transition::mh(mala, AcceptanceModel::exact(mix, mala)), cfg);
  const double w_mala = metrics::mixture_weights(r_mala.samples.points, mode_centers())[0];
  CHECK(w_mala >= 0.75);
  CHECK(w_mala <= 0.85);
}

TEST_CASE("gev chains reject proposals outside the support") {
  const auto gev = data::AnalyticTarget::gev(0.5, 0.0, 1.0);
  const auto rw = ProposalKernel::rw(1, 1.5);
  RunConfig cfg;
  cfg.n_chains = 50;
  cfg.n_steps = 500;
  cfg.seed = 12;
  cfg.init.cloud = gev.sample(50, 13).points;
  const auto r = run_chains(Transition::mh(rw, AcceptanceModel::exact(gev, rw)), cfg);
  CHECK(r.samples.points.minCoeff() > -2.0);  // support is x > mu - sigma / xi
}

TEST_CASE("annealed run") {
  const auto n01 = data::AnalyticTarget::standard_normal(2);
  const auto score = ScoreModel::analytic(n01);
  NoiseSchedule one;
  one.sigmas = {0.5};
  one.steps_per_level = 30;
  one.tau = 1.2;
  const auto ann = annealed_run(one, {score}, Driver::ula, 5, 14);
  RunConfig cfg;
  cfg.n_chains = 5;
  cfg.n_steps = 30;
  cfg.burn_in = 0;
  cfg.seed = 14;
  const auto direct = run_chains(Transition::ula(score, 1.2 * 0.25), cfg);
  CHECK(ann.samples.points == direct.final_states);
  CHECK(ann.step_sizes[0] == doctest::Approx(0.3));

  auto sched = NoiseSchedule::geometric(2.0, 0.1, 5);
  CHECK(sched.sigmas.front() == 2.0);
  CHECK(sched.sigmas.back() == doctest::Approx(0.1));
  sched.steps_per_level = 10;
  sched.extra_steps = 5;
  sched.tau = 0.0;
  const std::vector<ScoreModel> scores(5, score);
  Rng init_rng(15);
  const Array init = sbmh::testing::random_array(4, 2, init_rng);
  InitSpec spec;
  spec.cloud = init;
  CHECK(annealed_run(sched, scores, Driver::ula, 4, 16, spec).samples.points == init);
  CHECK(annealed_run(sched, scores, Driver::mh, 4, 16, spec).samples.points == init);

  sched.tau = 1.0;
  const auto mala = annealed_run(sched, scores, Driver::mh, 4, 16, spec);
  CHECK(mala.level_acceptance.size() == 5);
  CHECK(mala.level_acceptance.back() > 0.0);
  CHECK_THROWS_AS(annealed_run(sched, {score}, Driver::ula, 4, 16), ArgumentError);
  sched.sigmas = {1.0, 1.0};
  CHECK_THROWS_AS(sched.validate(), ArgumentError);
}

TEST_CASE("learned acceptance keeps a standard normal stationary") {
  const auto n01 = data::AnalyticTarget::standard_normal(1);
  const auto score = ScoreModel::analytic(n01);
  const auto rw = ProposalKernel::rw(1, 1.0);
  accept::SBMConfig sbm;
  sbm.epochs = 1000;
  sbm.hidden = 64;
  sbm.blocks = 2;
  sbm.lr = 1e-3;
  sbm.seed = 17;
  const auto trained = accept::train_acceptance(n01.sample(10000, 18), score, rw, sbm);
  RunConfig cfg;
  cfg.n_chains = 100;
  cfg.n_steps = 1250;
  cfg.seed = 19;
  const auto r = run_chains(Transition::mh(rw, trained.model), cfg);
  REQUIRE(r.samples.size() == 100000);
  const double m = r.samples.points.mean();
  const double v = variance(r.samples.points);
  MESSAGE("mean " << m << " variance " << v << " acceptance " << r.acceptance_rate());
  CHECK(std::abs(m) <= 0.1);
  CHECK(v >= 0.85);
  CHECK(v <= 1.15);
}

TEST_CASE("annealed mala is at least as close to moons as annealed ula") {
  const auto moons = data::make_moons(4000, 0.05, 1);
  auto sched = NoiseSchedule::geometric(1.0, 0.05, 5);
  scorematch::SMConfig sm;
  sm.epochs = 1000;
  sm.seed = 2;
  const auto fits = scorematch::train_noise_levels(moons, sched.sigmas, sm);
  REQUIRE(fits.size() == 5);
  CHECK(fits[2].sigma[0] == doctest::Approx(sched.sigmas[2]));
  std::vector<ScoreModel> scores;
  for (const auto& f : fits) scores.push_back(f.model);
  sched.steps_per_level = 100;
  sched.extra_steps = 200;
  sched.tau = 1.1;
  const auto ula = annealed_run(sched, scores, Driver::ula, 1000, 3);
  const auto mala = annealed_run(sched, scores, Driver::mh, 1000, 3);
  metrics::MetricsConfig mc;
  mc.n_eval = 1000;
  const double w_ula = metrics::evaluate(ula.samples.points, moons.points, mc).w1;
  const double w_mala = metrics::evaluate(mala.samples.points, moons.points, mc).w1;
  MESSAGE("annealed W1: ula " << w_ula << " mala " << w_mala);
  CHECK(w_mala <= w_ula);
}
