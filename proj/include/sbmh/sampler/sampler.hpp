#pragma once

#include "sbmh/accept/accept.hpp"
#include "sbmh/data/point_cloud.hpp"
#include "sbmh/proposal/proposal.hpp"
#include "sbmh/scorematch/score_model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbmh::sampler {

enum class Driver { ula, mh };
Driver parse_driver(const std::string& s);
std::string to_string(Driver d);

struct Tally {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t steps() const { return accepted + rejected; }
  double rate() const { return steps() == 0 ? 0.0 : static_cast<double>(accepted) / steps(); }
};

struct ChainState {
  Vector x;
  std::int64_t step = 0;
  Rng rng;
  Tally tally;
};

/// x + (eps^2 / 2) s(x) + eps z, z ~ N(0, I).
Vector ula_step(const scorematch::ScoreModel& score, const Vector& x, double eps, Rng& rng);
/// One ULA update per row, row i drawing from rngs[i].
Array ula_step_batch(const scorematch::ScoreModel& score, const Array& x, double eps,
                     std::span<Rng> rngs);

/// Propose, then accept iff u <= a(x', x) with u ~ Uniform(0, 1]. Returns
/// whether the move was accepted.
bool mh_step(const proposal::ProposalKernel& kernel, const accept::AcceptanceModel& acceptance,
             ChainState& state);
/// Batched MH step; row i uses rngs[i] and updates tally[i].
void mh_step_batch(const proposal::ProposalKernel& kernel,
                   const accept::AcceptanceModel& acceptance, Array& x, std::span<Rng> rngs,
                   std::span<Tally> tally);

/// Either a ULA driver (score + eps) or an MH driver (kernel + acceptance).
struct Transition {
  Driver driver = Driver::mh;
  scorematch::ScoreModel score;
  double eps = 0.0;
  proposal::ProposalKernel kernel;
  accept::AcceptanceModel acceptance;

  static Transition ula(scorematch::ScoreModel score, double eps);
  static Transition mh(proposal::ProposalKernel kernel, accept::AcceptanceModel acceptance);
  int dim() const;
  std::string describe() const;
};

/// Starting points. With a cloud of at least n_chains rows, chain k starts at
/// row k; with fewer rows, each chain picks a row with its own stream.
/// Otherwise x0 = mean + scale * z.
struct InitSpec {
  std::optional<Array> cloud;
  Vector mean;   // empty: zeros
  Vector scale;  // empty: ones
};

struct RunConfig {
  int n_chains = 1;
  int n_steps = 1000;
  std::optional<int> burn_in;  // default: 20% of n_steps
  int thin = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  int block = 64;  // chains advanced together; results do not depend on it
  InitSpec init;
  std::optional<std::filesystem::path> trace;  // chain,step,x0..,accepted

  int resolved_burn_in() const;
  void validate() const;
};

struct RunResult {
  data::PointCloud samples;          // chain-major, then step
  std::vector<Tally> tallies;        // per chain
  std::vector<std::uint64_t> seeds;  // per chain stream seed
  Array final_states;                // n_chains x d
  double wall_seconds = 0.0;

  double acceptance_rate() const;
};

/// Independent chains, each with stream derive_seed(seed, k). Keeps states
/// after steps burn_in+1, burn_in+1+thin, ... With n_steps == 0 the initial
/// states are returned.
RunResult run_chains(const Transition& t, const RunConfig& cfg);

/// Initial states of the chains, drawing from the given streams.
Array initial_states(const InitSpec& init, int dim, std::span<Rng> rngs, int first_chain);

struct NoiseSchedule {
  std::vector<double> sigmas;  // strictly decreasing, > 0
  int steps_per_level = 100;
  int extra_steps = 0;  // additional steps at the last level
  double tau = 1.0;     // eps_i = tau * sigma_i^2

  static NoiseSchedule geometric(double sigma_max, double sigma_min, int levels);
  double step_size(std::size_t level) const { return tau * sigmas[level] * sigmas[level]; }
  void validate() const;
};

/// Builds the acceptance for the MALA kernel at a level.
using AcceptanceFactory =
    std::function<accept::AcceptanceModel(std::size_t level, const proposal::ProposalKernel&)>;

struct AnnealedResult {
  data::PointCloud samples;  // final states, one per chain
  std::vector<double> level_acceptance;
  std::vector<double> step_sizes;
};

/// Runs each level's driver on the same chains, high noise to low, then
/// extra_steps at the last level. With MALA and no factory the acceptance is
/// Taylor-1 averaging on that level's score.
AnnealedResult annealed_run(const NoiseSchedule& schedule,
                            const std::vector<scorematch::ScoreModel>& scores, Driver method,
                            int n_chains, std::uint64_t seed, const InitSpec& init = {},
                            const AcceptanceFactory& acceptance = {}, int jobs = 1);

}  // namespace sbmh::sampler
