#include "sbmh/accept/accept.hpp"

#include "sbmh/error.hpp"
#include "sbmh/ndiff/optim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sbmh::accept {

using ndiff::Graph;
using ndiff::Var;
using proposal::ProposalKernel;
using scorematch::ScoreModel;

Kind parse_kind(const std::string& name) {
  if (name == "exact") return Kind::exact;
  if (name == "learned") return Kind::learned;
  if (name == "taylor1") return Kind::taylor1;
  if (name == "taylor1_avg" || name == "taylor1-avg") return Kind::taylor1_avg;
  if (name == "taylor2") return Kind::taylor2;
  if (name == "taylor2_avg" || name == "taylor2-avg") return Kind::taylor2_avg;
  if (name == "constant") return Kind::constant;
  throw ArgumentError("unknown acceptance kind '" + name +
                      "' (expected exact|learned|taylor1|taylor1_avg|taylor2|taylor2_avg)");
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::exact: return "exact";
    case Kind::learned: return "learned";
    case Kind::taylor1: return "taylor1";
    case Kind::taylor1_avg: return "taylor1_avg";
    case Kind::taylor2: return "taylor2";
    case Kind::taylor2_avg: return "taylor2_avg";
    case Kind::constant: return "constant";
  }
  return "?";
}

HessianMode parse_hessian_mode(const std::string& name) {
  if (name == "fd") return HessianMode::fd;
  if (name == "autodiff") return HessianMode::autodiff;
  throw ArgumentError("unknown hessian mode '" + name + "' (expected fd|autodiff)");
}

std::string to_string(HessianMode m) { return m == HessianMode::fd ? "fd" : "autodiff"; }

Pairing parse_pairing(const std::string& name) {
  if (name == "elementwise") return Pairing::elementwise;
  if (name == "cartesian") return Pairing::cartesian;
  throw ArgumentError("unknown pairing '" + name + "' (expected elementwise|cartesian)");
}

std::string to_string(Pairing p) {
  return p == Pairing::elementwise ? "elementwise" : "cartesian";
}

namespace {

void check_pair(const Array& to, const Array& from, int dim, const char* what) {
  if (to.rows() != from.rows() || to.cols() != dim || from.cols() != dim) {
    throw DimensionError(std::string(what) + ": expected matching N x " + std::to_string(dim) +
                         " arrays, got " + shape_string(to) + " and " + shape_string(from));
  }
}

bool is_taylor(Kind k) {
  return k == Kind::taylor1 || k == Kind::taylor1_avg || k == Kind::taylor2 ||
         k == Kind::taylor2_avg;
}

Array clamp(const Array& a, double c) {
  if (c <= 0.0) return a;
  return a.cwiseMax(-c).cwiseMin(c);
}

}  // namespace

// ------------------------------------------------------------- exact ratio

Vector exact_log_ratio(const data::AnalyticTarget& target, const ProposalKernel& kernel,
                       const Array& to, const Array& from) {
  check_pair(to, from, kernel.dim(), "exact acceptance");
  if (target.dim() != kernel.dim()) throw DimensionError("exact acceptance: target/kernel dims");
  Vector r = kernel.log_q(from, to) - kernel.log_q(to, from);
  for (Eigen::Index i = 0; i < to.rows(); ++i) {
    r[i] += target.logpdf(Vector(to.row(i).transpose())) -
            target.logpdf(Vector(from.row(i).transpose()));
  }
  return r;
}

double exact_acceptance(const data::AnalyticTarget& target, const ProposalKernel& kernel,
                        const Vector& to, const Vector& from) {
  const double r = exact_log_ratio(target, kernel, Array(to.transpose()), Array(from.transpose()))[0];
  return std::exp(std::min(0.0, r));
}

// ------------------------------------------------------------------ taylor

Array score_hessian(const ScoreModel& score, const Vector& x, HessianMode mode) {
  if (mode == HessianMode::autodiff) return score.jacobian(x);
  const int d = score.dim();
  const double h = 1e-4;
  Array probe(2 * d, d);
  for (int k = 0; k < d; ++k) {
    probe.row(2 * k) = x.transpose();
    probe.row(2 * k + 1) = x.transpose();
    probe(2 * k, k) += h;
    probe(2 * k + 1, k) -= h;
  }
  const Array s = score.evaluate(probe);
  Array hess(d, d);
  for (int k = 0; k < d; ++k) {
    hess.col(k) = ((s.row(2 * k) - s.row(2 * k + 1)) / (2 * h)).transpose();
  }
  return hess;
}

Vector taylor_log_ratio(const ScoreModel& score, const ProposalKernel& kernel, const Array& to,
                        const Array& from, Kind variant, HessianMode mode) {
  if (!is_taylor(variant)) throw ArgumentError("taylor_log_ratio: not a Taylor variant");
  check_pair(to, from, score.dim(), "taylor acceptance");
  const Array tau = to - from;
  const Array s_from = score.evaluate(from);
  const bool avg = variant == Kind::taylor1_avg || variant == Kind::taylor2_avg;
  Array s_to;
  if (avg) s_to = score.evaluate(to);
  Vector r(to.rows());
  for (Eigen::Index i = 0; i < to.rows(); ++i) {
    const Vector t = tau.row(i).transpose();
    if (avg) {
      r[i] = 0.5 * (s_from.row(i) + s_to.row(i)).dot(tau.row(i));
    } else {
      r[i] = s_from.row(i).dot(tau.row(i));
    }
    if (variant == Kind::taylor2) {
      const Array h = score_hessian(score, from.row(i).transpose(), mode);
      r[i] += 0.5 * t.dot(h * t);
    } else if (variant == Kind::taylor2_avg) {
      const Array hf = score_hessian(score, from.row(i).transpose(), mode);
      const Array ht = score_hessian(score, to.row(i).transpose(), mode);
      r[i] += 0.25 * t.dot((hf - ht) * t);
    }
  }
  return r + kernel.log_q(from, to) - kernel.log_q(to, from);
}

// -------------------------------------------------------- AcceptanceModel

AcceptanceModel AcceptanceModel::exact(data::AnalyticTarget target, ProposalKernel kernel) {
  if (target.dim() != kernel.dim()) {
    throw DimensionError("exact acceptance: target dimension " + std::to_string(target.dim()) +
                         " vs kernel dimension " + std::to_string(kernel.dim()));
  }
  AcceptanceModel m;
  m.kind_ = Kind::exact;
  m.kernel_ = std::move(kernel);
  m.target_ = std::make_shared<const data::AnalyticTarget>(std::move(target));
  return m;
}

AcceptanceModel AcceptanceModel::learned(ndiff::AcceptanceNet net, ProposalKernel kernel) {
  if (net.dim() != kernel.dim()) {
    throw DimensionError("learned acceptance: network dimension " + std::to_string(net.dim()) +
                         " vs kernel dimension " + std::to_string(kernel.dim()));
  }
  AcceptanceModel m;
  m.kind_ = Kind::learned;
  m.kernel_ = std::move(kernel);
  m.net_ = std::make_shared<const ndiff::AcceptanceNet>(std::move(net));
  return m;
}

AcceptanceModel AcceptanceModel::taylor(Kind variant, ScoreModel score, ProposalKernel kernel,
                                        HessianMode mode) {
  if (!is_taylor(variant)) throw ArgumentError("taylor acceptance: not a Taylor variant");
  if (score.dim() != kernel.dim()) throw DimensionError("taylor acceptance: score/kernel dims");
  AcceptanceModel m;
  m.kind_ = variant;
  m.kernel_ = std::move(kernel);
  m.score_ = std::move(score);
  m.hessian_ = mode;
  return m;
}

AcceptanceModel AcceptanceModel::constant(double c, ProposalKernel kernel) {
  if (!(c > 0.0 && c <= 1.0)) throw ArgumentError("constant acceptance must be in (0, 1]");
  AcceptanceModel m;
  m.kind_ = Kind::constant;
  m.constant_ = c;
  m.kernel_ = std::move(kernel);
  return m;
}

AcceptanceModel AcceptanceModel::scaled(double m) const {
  if (!(m >= 1.0) || !std::isfinite(m)) throw ArgumentError("acceptance scale must be >= 1");
  AcceptanceModel out = *this;
  out.divisor_ *= m;
  return out;
}

std::string AcceptanceModel::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << " [" << kernel_.describe() << "]";
  if (is_taylor(kind_) && (kind_ == Kind::taylor2 || kind_ == Kind::taylor2_avg)) {
    os << " hessian=" << to_string(hessian_);
  }
  if (kind_ == Kind::constant) os << " c=" << constant_;
  if (divisor_ != 1.0) os << " scaled 1/" << divisor_;
  return os.str();
}

Vector AcceptanceModel::log_acceptance(const Array& to, const Array& from) const {
  check_pair(to, from, dim(), "acceptance");
  Vector out(to.rows());
  switch (kind_) {
    case Kind::exact: {
      const auto& t = *target_;
      const Vector q = kernel_.log_q(from, to) - kernel_.log_q(to, from);
      for (Eigen::Index i = 0; i < to.rows(); ++i) {
        const Vector xt = to.row(i).transpose();
        const Vector xf = from.row(i).transpose();
        const double lf = t.logpdf(xf);
        if (!t.in_support(xt)) {
          out[i] = -std::numeric_limits<double>::infinity();
          continue;
        }
        out[i] = std::min(0.0, t.logpdf(xt) - lf + q[i]);
      }
      break;
    }
    case Kind::learned: out = net_->log_acceptance(to, from); break;
    case Kind::constant: out.setConstant(std::log(constant_)); break;
    default: out = taylor_log_ratio(score_, kernel_, to, from, kind_, hessian_).cwiseMin(0.0);
  }
  if (divisor_ != 1.0) out.array() -= std::log(divisor_);
  return out;
}

Vector AcceptanceModel::acceptance(const Array& to, const Array& from) const {
  return log_acceptance(to, from).array().exp().matrix();
}

double AcceptanceModel::acceptance_point(const Vector& to, const Vector& from) const {
  return acceptance(Array(to.transpose()), Array(from.transpose()))[0];
}

// ---------------------------------------------------------------- residual

Array log_acceptance_input_gradient(const ndiff::AcceptanceNet& net, const Array& to,
                                    const Array& from) {
  const Array u = ndiff::AcceptanceNet::join(to, from);
  const Array logit = net.logit(u);
  Array g = net.logit_input_gradient(u);
  // d log sigmoid(l) / dl = sigmoid(-l).
  for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) *= ndiff::sigmoid(-logit(i, 0));
  return g;
}

namespace {

// Everything in the residual that does not depend on the acceptance function:
// (s(x), -s(x')) - grad log q(x | x') + grad log q(x' | x), each term clamped.
Array fixed_terms(const ScoreModel& score, const ProposalKernel& kernel, const Array& x,
                  const Array& xp, double clip) {
  const auto d = x.cols();
  const auto n = x.rows();
  Array s(n, 2 * d), rev(n, 2 * d), fwd(n, 2 * d);
  s << score.evaluate(x), -score.evaluate(xp);
  const auto pg = kernel.grad_log_q_pair(x, xp);
  rev << pg.reverse.d_to, pg.reverse.d_from;
  fwd << pg.forward.d_from, pg.forward.d_to;
  return clamp(s, clip) - clamp(rev, clip) + clamp(fwd, clip);
}

}  // namespace

Array sbm_residual(const LogAcceptanceGrad& grad_log_a, const ScoreModel& score,
                   const ProposalKernel& kernel, const Array& x, const Array& x_prime,
                   double clip) {
  check_pair(x_prime, x, kernel.dim(), "sbm residual");
  if (score.dim() != kernel.dim()) throw DimensionError("sbm residual: score/kernel dims");
  const auto d = x.cols();
  const Array g1 = grad_log_a(x_prime, x);  // (d/dx', d/dx)
  const Array g2 = grad_log_a(x, x_prime);  // (d/dx, d/dx')
  if (g1.cols() != 2 * d || g2.cols() != 2 * d || g1.rows() != x.rows() ||
      g2.rows() != x.rows()) {
    throw DimensionError("sbm residual: log-acceptance gradient has the wrong shape");
  }
  Array a1(x.rows(), 2 * d);
  a1 << g1.rightCols(d), g1.leftCols(d);
  return clamp(a1, clip) - clamp(g2, clip) + fixed_terms(score, kernel, x, x_prime, clip);
}

Array sbm_residual(const ndiff::AcceptanceNet& net, const ScoreModel& score,
                   const ProposalKernel& kernel, const Array& x, const Array& x_prime,
                   double clip) {
  return sbm_residual(
      [&](const Array& to, const Array& from) {
        return log_acceptance_input_gradient(net, to, from);
      },
      score, kernel, x, x_prime, clip);
}

double entropy_term(double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw NumericError("entropy term needs a in (0, 1), got " + std::to_string(a));
  }
  return a * std::log(a) + (1.0 - a) * std::log1p(-a);
}

SbmLossParts sbm_loss_graph(Graph& g, const ndiff::AcceptanceNet& net, const ndiff::BoundParams& p,
                            const ScoreModel& score, const ProposalKernel& kernel, const Array& x,
                            const Array& x_prime, double lambda, double clip) {
  check_pair(x_prime, x, kernel.dim(), "sbm loss");
  if (net.dim() != kernel.dim()) throw DimensionError("sbm loss: network/kernel dims");
  if (!(lambda >= 0.0)) throw ArgumentError("sbm loss: lambda must be >= 0");
  const auto n = x.rows();
  const auto d = x.cols();
  Array u(2 * n, 2 * d);
  u << x_prime, x, x, x_prime;
  const auto trace = net.forward(g, p, g.constant(std::move(u)));
  // d log sigmoid(l) / dl = sigmoid(-l), pulled back to the inputs.
  Var grad = net.logit_vjp(g, p, trace, g.sigmoid(g.scale(trace.logit, -1.0)));
  Var g1 = g.rows(grad, 0, n);
  Var a1 = g.concat_cols(g.cols(g1, d, d), g.cols(g1, 0, d));
  Var a2 = g.rows(grad, n, n);
  if (clip > 0.0) {
    a1 = g.clamp(a1, clip);
    a2 = g.clamp(a2, clip);
  }
  SbmLossParts out;
  out.residual = g.add(g.sub(a1, a2), g.constant(fixed_terms(score, kernel, x, x_prime, clip)));
  out.logit = g.rows(trace.logit, 0, n);
  out.loss = g.mean(g.row_sum(g.square(out.residual)));
  if (lambda > 0.0) {
    Var f = out.logit;
    Var nf = g.scale(f, -1.0);
    Var h = g.add(g.mul(g.sigmoid(f), g.log_sigmoid(f)), g.mul(g.sigmoid(nf), g.log_sigmoid(nf)));
    out.loss = g.add(out.loss, g.scale(g.mean(h), lambda));
  }
  return out;
}

double sbm_loss(const ndiff::AcceptanceNet& net, const ScoreModel& score,
                const ProposalKernel& kernel, const Array& x, const Array& x_prime, double lambda,
                double clip) {
  Graph g;
  const auto p = net.bind(g);
  return g.scalar(sbm_loss_graph(g, net, p, score, kernel, x, x_prime, lambda, clip).loss);
}

std::pair<Array, Array> cartesian_pairs(const Array& x, const Array& x_prime) {
  if (x.cols() != x_prime.cols()) throw DimensionError("cartesian pairs: column mismatch");
  const auto n = x.rows(), m = x_prime.rows();
  Array a(n * m, x.cols()), b(n * m, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      a.row(i * m + j) = x.row(i);
      b.row(i * m + j) = x_prime.row(j);
    }
  }
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------- training

void SBMConfig::validate() const {
  if (!(lambda >= 0.0)) throw ArgumentError("acceptance training: lambda must be >= 0");
  if (epochs < 0) throw ArgumentError("acceptance training: epochs must be >= 0");
  if (!(lr > 0.0)) throw ArgumentError("acceptance training: lr must be > 0");
  if (batch_size < 1) throw ArgumentError("acceptance training: batch size must be >= 1");
  if (hidden < 1 || blocks < 0) throw ArgumentError("acceptance training: bad architecture");
  if (!(grad_clip > 0.0)) throw ArgumentError("acceptance training: grad clip must be > 0");
  auto in_unit = [](double a) { return a >= 0.0 && a <= 1.0; };
  if (alpha.empty()) {
    if (!in_unit(alpha_start) || !in_unit(alpha_end) || alpha_end < alpha_start) {
      throw ArgumentError("acceptance training: need 0 <= alpha_start <= alpha_end <= 1");
    }
  } else {
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!in_unit(alpha[i]) || (i > 0 && alpha[i] < alpha[i - 1])) {
        throw ArgumentError("acceptance training: alpha schedule must be non-decreasing in [0, 1]");
      }
    }
  }
}

double SBMConfig::alpha_at(int epoch) const {
  if (!alpha.empty()) {
    return alpha[std::min(static_cast<std::size_t>(epoch), alpha.size() - 1)];
  }
  if (epochs <= 1) return alpha_end;
  return alpha_start + (alpha_end - alpha_start) * epoch / static_cast<double>(epochs - 1);
}

TrainingPairs make_training_pairs(const Array& data, const ProposalKernel& kernel, double alpha,
                                  int batch_size, Rng& rng) {
  TrainingPairs t;
  t.x = data::subsample(data, batch_size, rng);
  t.x_tilde = data::subsample(data, batch_size, rng);
  const Array v = kernel.propose(t.x_tilde, rng);
  t.x_prime = alpha * v + (1.0 - alpha) * t.x_tilde;
  return t;
}

AcceptanceTraining train_acceptance(const data::PointCloud& dataset, const ScoreModel& score,
                                    const ProposalKernel& kernel, const SBMConfig& cfg) {
  cfg.validate();
  dataset.validate();
  if (dataset.dim() != kernel.dim() || score.dim() != kernel.dim()) {
    throw DimensionError("acceptance training: data, score and kernel dimensions differ");
  }
  ndiff::AcceptanceNet net(dataset.dim(), cfg.hidden, cfg.blocks);
  Rng init_rng(derive_seed(cfg.seed, 0));
  net.initialize(init_rng);

  AcceptanceTraining out;
  ndiff::AdamState adam(cfg.lr);
  Rng rng(derive_seed(cfg.seed, 1));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto pairs = make_training_pairs(dataset.points, kernel, cfg.alpha_at(epoch), cfg.batch_size,
                                     rng);
    if (cfg.pairing == Pairing::cartesian) {
      std::tie(pairs.x, pairs.x_prime) = cartesian_pairs(pairs.x, pairs.x_prime);
    }
    Graph g;
    const auto p = net.bind(g);
    const auto parts =
        sbm_loss_graph(g, net, p, score, kernel, pairs.x, pairs.x_prime, cfg.lambda, cfg.clip);
    const double value = g.scalar(parts.loss);
    if (!std::isfinite(value)) {
      throw TrainingError("acceptance training diverged (loss " + std::to_string(value) +
                          ") at epoch " + std::to_string(epoch));
    }
    out.loss_trace.push_back(value);
    const Array& logits = g.value(parts.logit);
    double mean_a = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) mean_a += ndiff::sigmoid(logits(i, 0));
    out.acceptance_trace.push_back(mean_a / static_cast<double>(logits.rows()));

    g.backward(parts.loss);
    std::vector<Array> grads;
    for (Var v : p.vars()) grads.push_back(g.grad(v));
    ndiff::clip_gradients_in_place(grads, cfg.grad_clip);
    try {
      ndiff::adam_step(net.parameters(), grads, adam);
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
    }
  }
  out.model = AcceptanceModel::learned(net, kernel);
  out.net = std::move(net);
  return out;
}

double grid_mean_acceptance(const AcceptanceModel& model, const Vector& from, const Vector& lo,
                            const Vector& hi, int n) {
  if (model.dim() != 2 || from.size() != 2 || lo.size() != 2 || hi.size() != 2) {
    throw DimensionError("grid acceptance: two-dimensional models only");
  }
  if (n < 2) throw ArgumentError("grid acceptance: need n >= 2");
  Array to(n * n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      to(i * n + j, 0) = lo[0] + (hi[0] - lo[0]) * i / (n - 1);
      to(i * n + j, 1) = lo[1] + (hi[1] - lo[1]) * j / (n - 1);
    }
  }
  Array fr(n * n, 2);
  fr.rowwise() = from.transpose();
  return model.acceptance(to, fr).mean();
}

void write_training_trace(const std::filesystem::path& path, const AcceptanceTraining& t) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "epoch,loss,mean_acceptance\n";
  char buf[96];
  for (std::size_t i = 0; i < t.loss_trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, t.loss_trace[i],
                  t.acceptance_trace[i]);
    f << buf;
  }
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace sbmh::accept
