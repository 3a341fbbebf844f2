#pragma once

#include "sbmh/data/point_cloud.hpp"
#include "sbmh/data/targets.hpp"
#include "sbmh/ndiff/graph.hpp"
#include "sbmh/ndiff/nets.hpp"
#include "sbmh/proposal/proposal.hpp"
#include "sbmh/scorematch/score_model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sbmh::accept {

enum class Kind { exact, learned, taylor1, taylor1_avg, taylor2, taylor2_avg, constant };
enum class HessianMode { fd, autodiff };
enum class Pairing { elementwise, cartesian };

Kind parse_kind(const std::string& name);
std::string to_string(Kind k);
HessianMode parse_hessian_mode(const std::string& name);
std::string to_string(HessianMode m);
Pairing parse_pairing(const std::string& name);
std::string to_string(Pairing p);

/// log r(to, from) = log p(to) + log q(from | to) - log p(from) - log q(to | from).
/// Throws SupportError when either point is outside the target support.
Vector exact_log_ratio(const data::AnalyticTarget& target, const proposal::ProposalKernel& kernel,
                       const Array& to, const Array& from);

/// min{1, r(to, from)} for a single pair.
double exact_acceptance(const data::AnalyticTarget& target, const proposal::ProposalKernel& kernel,
                        const Vector& to, const Vector& from);

/// Taylor approximations of log p(to) - log p(from), plus the exact proposal
/// terms. With t = to - from:
///   taylor1      s(from) . t
///   taylor1_avg  (s(from) + s(to)) . t / 2
///   taylor2      s(from) . t + t' H(from) t / 2
///   taylor2_avg  (s(from) + s(to)) . t / 2 + t' (H(from) - H(to)) t / 4
Vector taylor_log_ratio(const scorematch::ScoreModel& score, const proposal::ProposalKernel& kernel,
                        const Array& to, const Array& from, Kind variant,
                        HessianMode mode = HessianMode::fd);

/// Hessian of log p as the Jacobian of the score: central differences with
/// step 1e-4 (fd) or the score model's own Jacobian (autodiff).
Array score_hessian(const scorematch::ScoreModel& score, const Vector& x, HessianMode mode);

/// a(to, from) in [0, 1]. Exact and Taylor variants clamp the ratio at 1 in
/// log space; the learned variant is the network output itself.
class AcceptanceModel {
 public:
  AcceptanceModel() = default;

  static AcceptanceModel exact(data::AnalyticTarget target, proposal::ProposalKernel kernel);
  static AcceptanceModel learned(ndiff::AcceptanceNet net, proposal::ProposalKernel kernel);
  static AcceptanceModel taylor(Kind variant, scorematch::ScoreModel score,
                                proposal::ProposalKernel kernel,
                                HessianMode mode = HessianMode::fd);
  /// a == c everywhere (used for diagnostics and tests).
  static AcceptanceModel constant(double c, proposal::ProposalKernel kernel);

  /// a / m for m >= 1.
  AcceptanceModel scaled(double m) const;

  Kind kind() const { return kind_; }
  int dim() const { return kernel_.dim(); }
  double divisor() const { return divisor_; }
  const proposal::ProposalKernel& kernel() const { return kernel_; }
  const ndiff::AcceptanceNet* net() const { return net_.get(); }
  std::string describe() const;

  /// log a(to_i, from_i) per row. For the exact kind, a proposal outside
  /// the target support gets log a = -inf (p(to) = 0); the current state
  /// must be inside.
  Vector log_acceptance(const Array& to, const Array& from) const;
  Vector acceptance(const Array& to, const Array& from) const;
  double acceptance_point(const Vector& to, const Vector& from) const;

 private:
  Kind kind_ = Kind::exact;
  double divisor_ = 1.0;
  double constant_ = 1.0;
  HessianMode hessian_ = HessianMode::fd;
  proposal::ProposalKernel kernel_;
  std::shared_ptr<const data::AnalyticTarget> target_;
  std::shared_ptr<const ndiff::AcceptanceNet> net_;
  scorematch::ScoreModel score_;
};

/// Gradient of log a(to, from) with respect to (to, from), N x 2d, for a
/// generic acceptance function.
using LogAcceptanceGrad = std::function<Array(const Array& to, const Array& from)>;

/// d log a / d (to, from) of a network, via its input gradient.
Array log_acceptance_input_gradient(const ndiff::AcceptanceNet& net, const Array& to,
                                    const Array& from);

/// The score-balance residual in z = (x, x') coordinates, N x 2d:
///   grad log a(x', x) - grad log a(x, x') + (s(x), -s(x'))
///   - grad log q(x | x') + grad log q(x' | x)
/// Each of the terms is clamped element-wise to [-clip, clip] before the sum
/// (clip <= 0 disables clamping).
Array sbm_residual(const LogAcceptanceGrad& grad_log_a, const scorematch::ScoreModel& score,
                   const proposal::ProposalKernel& kernel, const Array& x, const Array& x_prime,
                   double clip = 0.0);
Array sbm_residual(const ndiff::AcceptanceNet& net, const scorematch::ScoreModel& score,
                   const proposal::ProposalKernel& kernel, const Array& x, const Array& x_prime,
                   double clip = 0.0);

/// a log a + (1 - a) log(1 - a); NumericError outside (0, 1).
double entropy_term(double a);

struct SbmLossParts {
  ndiff::Var loss;
  ndiff::Var residual;  // N x 2d, clamped
  ndiff::Var logit;     // logits of a(x', x), N x 1
};

/// mean_i |residual_i|^2 + lambda mean_i h(a(x'_i, x_i)) as graph nodes, with
/// both orderings of every pair evaluated in one stacked forward pass.
SbmLossParts sbm_loss_graph(ndiff::Graph& g, const ndiff::AcceptanceNet& net,
                            const ndiff::BoundParams& p, const scorematch::ScoreModel& score,
                            const proposal::ProposalKernel& kernel, const Array& x,
                            const Array& x_prime, double lambda, double clip);

double sbm_loss(const ndiff::AcceptanceNet& net, const scorematch::ScoreModel& score,
                const proposal::ProposalKernel& kernel, const Array& x, const Array& x_prime,
                double lambda, double clip);

/// All (x_i, x'_j) pairs, i major.
std::pair<Array, Array> cartesian_pairs(const Array& x, const Array& x_prime);

struct SBMConfig {
  double lambda = 2.0;
  int epochs = 1000;  // one epoch = one minibatch update
  double lr = 5e-4;
  int batch_size = 128;
  double alpha_start = 0.1;
  double alpha_end = 1.0;
  std::vector<double> alpha;  // explicit per-epoch schedule; overrides the linear one
  double clip = 100.0;        // residual terms
  double grad_clip = 10.0;    // parameter gradients
  int hidden = 256;
  int blocks = 3;
  Pairing pairing = Pairing::elementwise;
  std::uint64_t seed = 0;

  void validate() const;
  double alpha_at(int epoch) const;
};

/// Training pairs of one epoch: x from one minibatch, x~ from an independent
/// one, v' ~ q(. | x~), x' = alpha v' + (1 - alpha) x~.
struct TrainingPairs {
  Array x;
  Array x_tilde;
  Array x_prime;
};

TrainingPairs make_training_pairs(const Array& data, const proposal::ProposalKernel& kernel,
                                  double alpha, int batch_size, Rng& rng);

struct AcceptanceTraining {
  ndiff::AcceptanceNet net;
  AcceptanceModel model;
  std::vector<double> loss_trace;
  std::vector<double> acceptance_trace;  // batch mean of a(x', x) per epoch
};

AcceptanceTraining train_acceptance(const data::PointCloud& dataset,
                                    const scorematch::ScoreModel& score,
                                    const proposal::ProposalKernel& kernel, const SBMConfig& cfg);

/// Mean a(x', from) over an n x n uniform grid of x' on [lo, hi] (2D only).
double grid_mean_acceptance(const AcceptanceModel& model, const Vector& from, const Vector& lo,
                            const Vector& hi, int n);

/// CSV `epoch,loss,mean_acceptance`.
void write_training_trace(const std::filesystem::path& path, const AcceptanceTraining& t);

}  // namespace sbmh::accept
