#include "sbmh/proposal/proposal.hpp"

#include "sbmh/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sbmh::proposal {

Kind parse_kind(const std::string& name) {
  if (name == "rw") return Kind::rw;
  if (name == "mala") return Kind::mala;
  if (name == "pcn") return Kind::pcn;
  throw ArgumentError("unknown proposal '" + name + "' (expected rw|mala|pcn)");
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::rw: return "rw";
    case Kind::mala: return "mala";
    case Kind::pcn: return "pcn";
  }
  return "?";
}

ProposalKernel ProposalKernel::rw(int dim, double sigma) {
  if (dim < 1) throw ArgumentError("rw proposal: dim must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("rw proposal: sigma must be > 0");
  ProposalKernel k;
  k.kind_ = Kind::rw;
  k.dim_ = dim;
  k.param_ = sigma;
  return k;
}

ProposalKernel ProposalKernel::mala(double eps, scorematch::ScoreModel score, bool exact_jacobian) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("mala proposal: eps must be > 0");
  if (!score.valid()) throw ArgumentError("mala proposal: needs a score model");
  ProposalKernel k;
  k.kind_ = Kind::mala;
  k.dim_ = score.dim();
  k.param_ = eps;
  k.exact_jacobian_ = exact_jacobian;
  k.score_ = std::move(score);
  return k;
}

ProposalKernel ProposalKernel::pcn(int dim, double beta) {
  if (dim < 1) throw ArgumentError("pcn proposal: dim must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("pcn proposal: beta must be in (0, 1]");
  ProposalKernel k;
  k.kind_ = Kind::pcn;
  k.dim_ = dim;
  k.param_ = beta;
  return k;
}

std::string ProposalKernel::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case Kind::rw: os << " sigma=" << param_; break;
    case Kind::mala:
      os << " eps=" << param_ << (exact_jacobian_ ? " jacobian=exact" : " jacobian=stop-gradient");
      break;
    case Kind::pcn: os << " beta=" << param_; break;
  }
  return os.str();
}

void ProposalKernel::check(const Array& a, const char* what) const {
  if (a.cols() != dim_) {
    throw DimensionError(std::string("proposal: ") + what + " has shape " + shape_string(a) +
                         ", expected " + std::to_string(dim_) + " columns");
  }
}

Array ProposalKernel::mean(const Array& from) const {
  check(from, "state");
  switch (kind_) {
    case Kind::rw: return from;
    case Kind::mala: return from + (0.5 * param_ * param_) * score_.evaluate(from);
    case Kind::pcn: return std::sqrt(1.0 - param_ * param_) * from;
  }
  return from;
}

Array ProposalKernel::propose(const Array& from, std::span<Rng> rngs) const {
  if (static_cast<Eigen::Index>(rngs.size()) != from.rows()) {
    throw DimensionError("proposal: need one random stream per row");
  }
  Array out = mean(from);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Rng& rng = rngs[static_cast<std::size_t>(i)];
    // Fresh distribution per stream: normal_distribution caches a spare draw.
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int j = 0; j < dim_; ++j) out(i, j) += param_ * unit(rng);
  }
  return out;
}

Array ProposalKernel::propose(const Array& from, Rng& rng) const {
  Array out = mean(from);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += param_ * unit(rng);
  return out;
}

Vector ProposalKernel::propose_point(const Vector& from, Rng& rng) const {
  return propose(Array(from.transpose()), rng).row(0).transpose();
}

Vector ProposalKernel::log_q_from_mean(const Array& to, const Array& m) const {
  check(to, "target state");
  const double var = param_ * param_;
  const double norm = -0.5 * dim_ * std::log(2.0 * std::numbers::pi * var);
  return ((to - m).rowwise().squaredNorm().array() * (-0.5 / var) + norm).matrix();
}

Vector ProposalKernel::log_q(const Array& to, const Array& from) const {
  if (to.rows() != from.rows()) throw DimensionError("log_q: row count mismatch");
  return log_q_from_mean(to, mean(from));
}

double ProposalKernel::log_q_point(const Vector& to, const Vector& from) const {
  return log_q(Array(to.transpose()), Array(from.transpose()))[0];
}

LogQGrad ProposalKernel::grad_log_q(const Array& to, const Array& from) const {
  const double var = param_ * param_;
  LogQGrad g;
  const Array resid = (to - mean(from)) / var;
  g.d_to = -resid;
  switch (kind_) {
    case Kind::rw: g.d_from = resid; break;
    case Kind::pcn: g.d_from = std::sqrt(1.0 - var) * resid; break;
    case Kind::mala:
      if (!exact_jacobian_) {
        g.d_from = resid;
      } else {
        // d m / d from = I + (eps^2 / 2) J(from); pull the residual back through it.
        g.d_from.resize(resid.rows(), resid.cols());
        for (Eigen::Index i = 0; i < resid.rows(); ++i) {
          const Array jac = score_.jacobian(from.row(i).transpose());
          g.d_from.row(i) = resid.row(i) + (0.5 * var) * (resid.row(i) * jac);
        }
      }
      break;
  }
  return g;
}

PairGrad ProposalKernel::grad_log_q_pair(const Array& x, const Array& x_prime) const {
  check(x, "x");
  check(x_prime, "x'");
  if (x.rows() != x_prime.rows()) throw DimensionError("grad_log_q_pair: row count mismatch");
  return PairGrad{grad_log_q(x_prime, x), grad_log_q(x, x_prime)};
}

}  // namespace sbmh::proposal
