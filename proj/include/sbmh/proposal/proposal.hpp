#pragma once

#include "sbmh/ndiff/array.hpp"
#include "sbmh/scorematch/score_model.hpp"

#include <span>
#include <string>

namespace sbmh::proposal {

enum class Kind { rw, mala, pcn };

Kind parse_kind(const std::string& name);
std::string to_string(Kind k);

/// d log q(to | from) split by argument, one row per pair.
struct LogQGrad {
  Array d_to;
  Array d_from;
};

/// The blocks of grad_{x, x'} log q(x' | x) and grad_{x, x'} log q(x | x').
struct PairGrad {
  LogQGrad forward;  // log q(x' | x): d_to is wrt x', d_from wrt x
  LogQGrad reverse;  // log q(x | x'): d_to is wrt x,  d_from wrt x'
};

/// Gaussian proposal q(. | x) = N(m(x), s^2 I):
///   rw    m = x,                      s = sigma
///   mala  m = x + (eps^2 / 2) s~(x),  s = eps
///   pcn   m = sqrt(1 - beta^2) x,     s = beta
/// For MALA the drift is treated as a constant when differentiating log q
/// unless `exact_jacobian` is set, in which case the score Jacobian enters.
class ProposalKernel {
 public:
  ProposalKernel() = default;

  static ProposalKernel rw(int dim, double sigma);
  static ProposalKernel mala(double eps, scorematch::ScoreModel score, bool exact_jacobian = false);
  static ProposalKernel pcn(int dim, double beta);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// sigma, eps or beta.
  double parameter() const { return param_; }
  /// Standard deviation of the Gaussian proposal.
  double scale() const { return param_; }
  bool exact_jacobian() const { return exact_jacobian_; }
  const scorematch::ScoreModel& score() const { return score_; }
  std::string describe() const;

  /// Proposal means m(from), N x d.
  Array mean(const Array& from) const;

  /// One draw per row; row i uses rngs[i].
  Array propose(const Array& from, std::span<Rng> rngs) const;
  /// One draw per row from a single stream (row-major noise order).
  Array propose(const Array& from, Rng& rng) const;
  Vector propose_point(const Vector& from, Rng& rng) const;

  /// log q(to | from), full normalized Gaussian log density, per row.
  Vector log_q(const Array& to, const Array& from) const;
  double log_q_point(const Vector& to, const Vector& from) const;
  /// Same with the means m(from) supplied by the caller.
  Vector log_q_from_mean(const Array& to, const Array& mean) const;

  PairGrad grad_log_q_pair(const Array& x, const Array& x_prime) const;

 private:
  void check(const Array& a, const char* what) const;
  LogQGrad grad_log_q(const Array& to, const Array& from) const;

  Kind kind_ = Kind::rw;
  int dim_ = 0;
  double param_ = 0.0;
  bool exact_jacobian_ = false;
  scorematch::ScoreModel score_;
};

}  // namespace sbmh::proposal
