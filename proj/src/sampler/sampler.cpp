#include "sbmh/sampler/sampler.hpp"

#include "sbmh/error.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace sbmh::sampler {

Driver parse_driver(const std::string& s) {
  if (s == "ula") return Driver::ula;
  if (s == "mh" || s == "mala") return Driver::mh;
  throw ArgumentError("unknown driver '" + s + "' (expected ula|mh)");
}

std::string to_string(Driver d) { return d == Driver::ula ? "ula" : "mh"; }

Array ula_step_batch(const scorematch::ScoreModel& score, const Array& x, double eps,
                     std::span<Rng> rngs) {
  if (static_cast<Eigen::Index>(rngs.size()) != x.rows()) {
    throw DimensionError("ula: need one random stream per row");
  }
  if (!(eps >= 0.0)) throw ArgumentError("ula: step size must be >= 0");
  if (eps == 0.0) return x;
  Array out = x + (0.5 * eps * eps) * score.evaluate(x);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += eps * unit(rngs[static_cast<std::size_t>(i)]);
  }
  return out;
}

Vector ula_step(const scorematch::ScoreModel& score, const Vector& x, double eps, Rng& rng) {
  return ula_step_batch(score, Array(x.transpose()), eps, std::span<Rng>(&rng, 1)).row(0).transpose();
}

void mh_step_batch(const proposal::ProposalKernel& kernel,
                   const accept::AcceptanceModel& acceptance, Array& x, std::span<Rng> rngs,
                   std::span<Tally> tally) {
  if (tally.size() != rngs.size()) throw DimensionError("mh: tally and stream counts differ");
  const Array prop = kernel.propose(x, rngs);
  const Vector a = acceptance.acceptance(prop, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    // u in (0, 1], so a == 0 never accepts.
    const double u = 1.0 - std::generate_canonical<double, 53>(rngs[k]);
    if (u <= a[i]) {
      x.row(i) = prop.row(i);
      ++tally[k].accepted;
    } else {
      ++tally[k].rejected;
    }
  }
}

bool mh_step(const proposal::ProposalKernel& kernel, const accept::AcceptanceModel& acceptance,
             ChainState& state) {
  Array x(state.x.transpose());
  const auto before = state.tally.accepted;
  mh_step_batch(kernel, acceptance, x, std::span<Rng>(&state.rng, 1),
                std::span<Tally>(&state.tally, 1));
  state.x = x.row(0).transpose();
  ++state.step;
  return state.tally.accepted > before;
}

Transition Transition::ula(scorematch::ScoreModel score, double eps) {
  if (!score.valid()) throw ArgumentError("ula: needs a score model");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ArgumentError("ula: step size must be >= 0");
  Transition t;
  t.driver = Driver::ula;
  t.score = std::move(score);
  t.eps = eps;
  return t;
}

Transition Transition::mh(proposal::ProposalKernel kernel, accept::AcceptanceModel acceptance) {
  if (kernel.dim() != acceptance.dim()) {
    throw DimensionError("mh: kernel and acceptance dimensions differ");
  }
  Transition t;
  t.driver = Driver::mh;
  t.kernel = std::move(kernel);
  t.acceptance = std::move(acceptance);
  return t;
}

int Transition::dim() const { return driver == Driver::ula ? score.dim() : kernel.dim(); }

std::string Transition::describe() const {
  std::ostringstream os;
  if (driver == Driver::ula) {
    os << "ula eps=" << eps;
  } else {
    os << "mh proposal=(" << kernel.describe() << ") acceptance=(" << acceptance.describe() << ")";
  }
  return os.str();
}

int RunConfig::resolved_burn_in() const { return burn_in ? *burn_in : n_steps / 5; }

void RunConfig::validate() const {
  if (n_chains < 1) throw ArgumentError("n_chains must be >= 1");
  if (n_steps < 0) throw ArgumentError("n_steps must be >= 0");
  if (thin < 1) throw ArgumentError("thin must be >= 1");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (block < 1) throw ArgumentError("block must be >= 1");
  const int b = resolved_burn_in();
  if (b < 0) throw ArgumentError("burn_in must be >= 0");
  if (n_steps > 0 && b >= n_steps) {
    throw ArgumentError("burn_in (" + std::to_string(b) + ") must be < n_steps (" +
                        std::to_string(n_steps) + ")");
  }
  if (n_steps == 0 && b != 0) throw ArgumentError("burn_in must be 0 when n_steps is 0");
}

double RunResult::acceptance_rate() const {
  std::int64_t a = 0, n = 0;
  for (const auto& t : tallies) {
    a += t.accepted;
    n += t.steps();
  }
  return n == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(n);
}

Array initial_states(const InitSpec& init, int dim, std::span<Rng> rngs, int first_chain) {
  const auto n = static_cast<Eigen::Index>(rngs.size());
  Array x(n, dim);
  if (init.cloud) {
    const Array& c = *init.cloud;
    if (c.rows() == 0) throw ArgumentError("init cloud is empty");
    if (c.cols() != dim) {
      throw DimensionError("init cloud has " + std::to_string(c.cols()) + " columns, expected " +
                           std::to_string(dim));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index k = first_chain + i;
      if (k < c.rows()) {
        x.row(i) = c.row(k);
      } else {
        std::uniform_int_distribution<Eigen::Index> pick(0, c.rows() - 1);
        x.row(i) = c.row(pick(rngs[static_cast<std::size_t>(i)]));
      }
    }
    return x;
  }
  const Vector mean = init.mean.size() ? init.mean : Vector::Zero(dim);
  const Vector scale = init.scale.size() ? init.scale : Vector::Ones(dim);
  if (mean.size() != dim || scale.size() != dim) throw DimensionError("init mean/scale dimension");
  for (Eigen::Index i = 0; i < n; ++i) {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int j = 0; j < dim; ++j) x(i, j) = mean[j] + scale[j] * unit(rngs[static_cast<std::size_t>(i)]);
  }
  return x;
}

namespace {

void advance(const Transition& t, Array& x, std::span<Rng> rngs, std::span<Tally> tally) {
  if (t.driver == Driver::ula) {
    x = ula_step_batch(t.score, x, t.eps, rngs);
    for (auto& e : tally) ++e.accepted;
  } else {
    mh_step_batch(t.kernel, t.acceptance, x, rngs, tally);
  }
}

// Runs fn(block index) over all blocks on `jobs` threads; rethrows the first
// error.
void parallel_blocks(int blocks, int jobs, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (int b; (b = next.fetch_add(1)) < blocks;) {
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next.store(blocks);
      }
    }
  };
  const int n = std::min(jobs, blocks);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (err) std::rethrow_exception(err);
}

std::vector<Rng> chain_streams(std::uint64_t seed, int first, int count) {
  std::vector<Rng> r;
  r.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) r.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(first + k)));
  return r;
}

}  // namespace

RunResult run_chains(const Transition& t, const RunConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int d = t.dim();
  const int burn = cfg.resolved_burn_in();
  const int kept = cfg.n_steps == 0 ? 1 : (cfg.n_steps - burn + cfg.thin - 1) / cfg.thin;
  const int blocks = (cfg.n_chains + cfg.block - 1) / cfg.block;

  RunResult res;
  res.samples.points.resize(static_cast<Eigen::Index>(cfg.n_chains) * kept, d);
  res.final_states.resize(cfg.n_chains, d);
  res.tallies.assign(static_cast<std::size_t>(cfg.n_chains), Tally{});
  for (int k = 0; k < cfg.n_chains; ++k) res.seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
  std::vector<std::string> traces(cfg.trace ? static_cast<std::size_t>(cfg.n_chains) : 0);

  parallel_blocks(blocks, cfg.jobs, [&](int b) {
    const int c0 = b * cfg.block;
    const int nc = std::min(cfg.block, cfg.n_chains - c0);
    auto rngs = chain_streams(cfg.seed, c0, nc);
    std::span<Tally> tally(res.tallies.data() + c0, static_cast<std::size_t>(nc));
    Array x = initial_states(cfg.init, d, rngs, c0);
    std::vector<std::ostringstream> tr(cfg.trace ? static_cast<std::size_t>(nc) : 0);
    for (auto& os : tr) os << std::setprecision(17);
    auto record = [&](int slot) {
      for (int i = 0; i < nc; ++i) {
        res.samples.points.row(static_cast<Eigen::Index>(c0 + i) * kept + slot) = x.row(i);
      }
    };
    if (cfg.n_steps == 0) record(0);
    std::vector<std::int64_t> before(static_cast<std::size_t>(nc));
    for (int step = 1; step <= cfg.n_steps; ++step) {
      for (int i = 0; i < nc; ++i) before[static_cast<std::size_t>(i)] = tally[static_cast<std::size_t>(i)].accepted;
      advance(t, x, rngs, tally);
      if (step > burn && (step - burn - 1) % cfg.thin == 0) record((step - burn - 1) / cfg.thin);
      for (int i = 0; cfg.trace && i < nc; ++i) {
        auto& os = tr[static_cast<std::size_t>(i)];
        os << (c0 + i) << ',' << step;
        for (int j = 0; j < d; ++j) os << ',' << x(i, j);
        os << ',' << (tally[static_cast<std::size_t>(i)].accepted > before[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
      }
    }
    res.final_states.middleRows(c0, nc) = x;
    for (int i = 0; cfg.trace && i < nc; ++i) traces[static_cast<std::size_t>(c0 + i)] = tr[static_cast<std::size_t>(i)].str();
  });

  if (cfg.trace) {
    std::ofstream out(*cfg.trace);
    if (!out) throw IoError("cannot open " + cfg.trace->string() + " for writing");
    out << "chain,step";
    for (int j = 0; j < d; ++j) out << ",x" << j;
    out << ",accepted\n";
    for (const auto& s : traces) out << s;
    if (!out) throw IoError("write failed on " + cfg.trace->string());
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

NoiseSchedule NoiseSchedule::geometric(double sigma_max, double sigma_min, int levels) {
  if (levels < 1) throw ArgumentError("noise schedule needs at least one level");
  if (!(sigma_max > 0.0 && sigma_min > 0.0)) throw ArgumentError("noise levels must be > 0");
  if (levels > 1 && !(sigma_max > sigma_min)) throw ArgumentError("sigma_max must exceed sigma_min");
  NoiseSchedule s;
  for (int i = 0; i < levels; ++i) {
    const double f = levels == 1 ? 0.0 : static_cast<double>(i) / (levels - 1);
    s.sigmas.push_back(sigma_max * std::pow(sigma_min / sigma_max, f));
  }
  return s;
}

void NoiseSchedule::validate() const {
  if (sigmas.empty()) throw ArgumentError("noise schedule has no levels");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw ArgumentError("noise levels must be > 0");
    if (i > 0 && !(sigmas[i] < sigmas[i - 1])) {
      throw ArgumentError("noise levels must be strictly decreasing");
    }
  }
  if (steps_per_level < 0 || extra_steps < 0) throw ArgumentError("step counts must be >= 0");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be >= 0");
}

AnnealedResult annealed_run(const NoiseSchedule& schedule,
                            const std::vector<scorematch::ScoreModel>& scores, Driver method,
                            int n_chains, std::uint64_t seed, const InitSpec& init,
                            const AcceptanceFactory& acceptance, int jobs) {
  schedule.validate();
  if (scores.size() != schedule.sigmas.size()) {
    throw ArgumentError("annealed run: " + std::to_string(schedule.sigmas.size()) +
                        " noise levels but " + std::to_string(scores.size()) + " score models");
  }
  if (n_chains < 1) throw ArgumentError("n_chains must be >= 1");
  const int d = scores.front().dim();
  for (const auto& s : scores) {
    if (s.dim() != d) throw DimensionError("annealed run: score models differ in dimension");
  }
  const std::size_t levels = schedule.sigmas.size();

  // eps == 0 means no movement, which no MH kernel can express.
  std::vector<std::optional<Transition>> steps(levels);
  AnnealedResult res;
  for (std::size_t l = 0; l < levels; ++l) {
    const double eps = schedule.step_size(l);
    res.step_sizes.push_back(eps);
    if (method == Driver::ula) {
      steps[l] = Transition::ula(scores[l], eps);
    } else if (eps > 0.0) {
      auto kernel = proposal::ProposalKernel::mala(eps, scores[l]);
      auto a = acceptance ? acceptance(l, kernel)
                          : accept::AcceptanceModel::taylor(accept::Kind::taylor1_avg, scores[l], kernel);
      steps[l] = Transition::mh(std::move(kernel), std::move(a));
    }
  }

  const int block = 64;
  const int blocks = (n_chains + block - 1) / block;
  res.samples.points.resize(n_chains, d);
  std::vector<std::vector<Tally>> level_tally(levels, std::vector<Tally>(static_cast<std::size_t>(n_chains)));
  parallel_blocks(blocks, jobs, [&](int b) {
    const int c0 = b * block;
    const int nc = std::min(block, n_chains - c0);
    auto rngs = chain_streams(seed, c0, nc);
    Array x = initial_states(init, d, rngs, c0);
    for (std::size_t l = 0; l < levels; ++l) {
      const int n = schedule.steps_per_level + (l + 1 == levels ? schedule.extra_steps : 0);
      if (!steps[l]) continue;
      std::span<Tally> tally(level_tally[l].data() + c0, static_cast<std::size_t>(nc));
      for (int s = 0; s < n; ++s) advance(*steps[l], x, rngs, tally);
    }
    res.samples.points.middleRows(c0, nc) = x;
  });
  for (const auto& lt : level_tally) {
    std::int64_t a = 0, n = 0;
    for (const auto& t : lt) {
      a += t.accepted;
      n += t.steps();
    }
    res.level_acceptance.push_back(n == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(n));
  }
  return res;
}

}  // namespace sbmh::sampler
