#include "sbmh/scorematch/scorematch.hpp"

#include "sbmh/error.hpp"
#include "sbmh/ndiff/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace sbmh::scorematch {

using ndiff::Graph;
using ndiff::Var;

Method parse_method(const std::string& name) {
  if (name == "hyvarinen") return Method::hyvarinen;
  if (name == "sliced") return Method::sliced;
  if (name == "denoising") return Method::denoising;
  throw ArgumentError("unknown score-matching method '" + name +
                      "' (expected hyvarinen|sliced|denoising)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::hyvarinen: return "hyvarinen";
    case Method::sliced: return "sliced";
    case Method::denoising: return "denoising";
  }
  return "?";
}

Array standard_normal(Eigen::Index n, int dim, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Array out(n, dim);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = unit(rng);
  return out;
}

std::vector<Array> sliced_directions(Eigen::Index n, int dim, int projections, Rng& rng) {
  std::vector<Array> v;
  v.reserve(static_cast<std::size_t>(projections));
  for (int k = 0; k < projections; ++k) v.push_back(standard_normal(n, dim, rng));
  return v;
}

Array denoising_target(const Array& x, const Array& x_noisy, const Vector& sigma) {
  if (sigma.size() != x.cols()) throw DimensionError("denoising: sigma has wrong length");
  Array t = x - x_noisy;
  for (Eigen::Index j = 0; j < t.cols(); ++j) t.col(j) /= sigma[j] * sigma[j];
  return t;
}

namespace {

void check_batch(const ScoreModel& s, const Array& batch) {
  if (batch.rows() < 1) throw ArgumentError("score loss: empty batch");
  if (batch.cols() != s.dim()) {
    throw DimensionError("score loss: batch " + shape_string(batch) + " for a " +
                         std::to_string(s.dim()) + "-dimensional score");
  }
}

Vector check_sigma(const Vector& sigma, Eigen::Index dim) {
  if (sigma.size() != dim) throw DimensionError("denoising: sigma has wrong length");
  if (!(sigma.array() > 0.0).all()) throw ArgumentError("denoising: sigma must be > 0");
  return sigma;
}

Array add_noise(const Array& x, const Array& eps, const Vector& sigma) {
  Array noisy = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) noisy.col(j) += sigma[j] * eps.col(j);
  return noisy;
}

}  // namespace

double hyvarinen_loss(const ScoreModel& s, const Array& batch) {
  check_batch(s, batch);
  if (s.dim() > kMaxHyvarinenDim) {
    throw DimensionError("hyvarinen loss needs d <= " + std::to_string(kMaxHyvarinenDim) +
                         " (got " + std::to_string(s.dim()) + "); use sliced");
  }
  const Array sv = s.evaluate(batch);
  double total = 0.5 * sv.squaredNorm();
  for (int j = 0; j < s.dim(); ++j) {
    Array e = Array::Zero(batch.rows(), batch.cols());
    e.col(j).setOnes();
    total += s.jvp(batch, e).col(j).sum();
  }
  return total / static_cast<double>(batch.rows());
}

double sliced_loss(const ScoreModel& s, const Array& batch, int projections, std::uint64_t seed) {
  check_batch(s, batch);
  if (projections < 1) throw ArgumentError("sliced loss: projections must be >= 1");
  Rng rng(seed);
  const auto dirs = sliced_directions(batch.rows(), s.dim(), projections, rng);
  const Array sv = s.evaluate(batch);
  double quad = 0.0;
  for (const Array& v : dirs) quad += (v.array() * s.jvp(batch, v).array()).sum();
  return (0.5 * sv.squaredNorm() + quad / projections) / static_cast<double>(batch.rows());
}

double denoising_loss(const ScoreModel& s, const Array& batch, const Vector& sigma,
                      std::uint64_t seed) {
  check_batch(s, batch);
  check_sigma(sigma, batch.cols());
  Rng rng(seed);
  const Array eps = standard_normal(batch.rows(), s.dim(), rng);
  const Array noisy = add_noise(batch, eps, sigma);
  const Array target = denoising_target(batch, noisy, sigma);
  return (target - s.evaluate(noisy)).squaredNorm() / static_cast<double>(batch.rows());
}

double denoising_loss(const ScoreModel& s, const Array& batch, double sigma, std::uint64_t seed) {
  return denoising_loss(s, batch, Vector::Constant(batch.cols(), sigma), seed);
}

// ------------------------------------------------------------------ graphs

Var hyvarinen_graph(Graph& g, const ndiff::ScoreNet& net, const ndiff::BoundParams& p,
                    const Array& batch) {
  if (net.dim() > kMaxHyvarinenDim) {
    throw DimensionError("hyvarinen loss needs d <= " + std::to_string(kMaxHyvarinenDim));
  }
  Var x = g.constant(batch);
  const auto t = net.forward(g, p, x);
  Var per_row = g.scale(g.row_sum(g.square(t.output)), 0.5);
  for (int j = 0; j < net.dim(); ++j) {
    Array e = Array::Zero(batch.rows(), batch.cols());
    e.col(j).setOnes();
    Var jv = net.jvp(g, p, t, g.constant(std::move(e)));
    per_row = g.add(per_row, g.cols(jv, j, 1));
  }
  return g.mean(per_row);
}

Var sliced_graph(Graph& g, const ndiff::ScoreNet& net, const ndiff::BoundParams& p,
                 const Array& batch, const std::vector<Array>& directions) {
  if (directions.empty()) throw ArgumentError("sliced loss: projections must be >= 1");
  Var x = g.constant(batch);
  const auto t = net.forward(g, p, x);
  Var quad;
  for (const Array& v : directions) {
    Var vv = g.constant(v);
    Var q = g.row_sum(g.mul(vv, net.jvp(g, p, t, vv)));
    quad = quad.id < 0 ? q : g.add(quad, q);
  }
  quad = g.scale(quad, 1.0 / static_cast<double>(directions.size()));
  return g.mean(g.add(g.scale(g.row_sum(g.square(t.output)), 0.5), quad));
}

Var denoising_graph(Graph& g, const ndiff::ScoreNet& net, const ndiff::BoundParams& p,
                    const Array& noisy, const Array& target) {
  const auto t = net.forward(g, p, g.constant(noisy));
  return g.mean(g.row_sum(g.square(g.sub(g.constant(target), t.output))));
}

// ---------------------------------------------------------------- training

void SMConfig::validate() const {
  if (epochs < 0) throw ArgumentError("score training: epochs must be >= 0");
  if (!(lr > 0.0)) throw ArgumentError("score training: lr must be > 0");
  if (batch_size < 1) throw ArgumentError("score training: batch size must be >= 1");
  if (method == Method::sliced && projections < 1) {
    throw ArgumentError("score training: sliced needs projections >= 1");
  }
  if (hidden < 0 || hidden_layers < 0) throw ArgumentError("score training: bad architecture");
  if (!(clip > 0.0)) throw ArgumentError("score training: clip must be > 0");
  if (!(holdout >= 0.0 && holdout < 1.0)) {
    throw ArgumentError("score training: holdout fraction must be in [0, 1)");
  }
}

namespace {

Array gather(const Array& pts, const std::vector<Eigen::Index>& idx, std::size_t from,
             std::size_t count) {
  Array out(static_cast<Eigen::Index>(count), pts.cols());
  for (std::size_t k = 0; k < count; ++k) {
    out.row(static_cast<Eigen::Index>(k)) = pts.row(idx[from + k]);
  }
  return out;
}

double method_loss(const ScoreModel& model, const Array& pts, const SMConfig& cfg,
                   const Vector& sigma, std::uint64_t seed) {
  switch (cfg.method) {
    case Method::hyvarinen: return hyvarinen_loss(model, pts);
    case Method::sliced: return sliced_loss(model, pts, cfg.projections, seed);
    case Method::denoising: return denoising_loss(model, pts, sigma, seed);
  }
  return 0.0;
}

}  // namespace

ScoreTraining train_score(const data::PointCloud& dataset, const SMConfig& cfg) {
  cfg.validate();
  ndiff::ScoreNet net(dataset.dim(), cfg.hidden, cfg.hidden_layers);
  Rng init_rng(derive_seed(cfg.seed, 0));
  net.initialize(init_rng);
  return train_score(dataset, cfg, std::move(net));
}

ScoreTraining train_score(const data::PointCloud& dataset, const SMConfig& cfg,
                          ndiff::ScoreNet net) {
  cfg.validate();
  dataset.validate();
  if (net.dim() != dataset.dim()) {
    throw DimensionError("score training: network dimension " + std::to_string(net.dim()) +
                         " does not match data dimension " + std::to_string(dataset.dim()));
  }
  if (cfg.method == Method::hyvarinen && dataset.dim() > kMaxHyvarinenDim) {
    throw DimensionError("hyvarinen loss needs d <= " + std::to_string(kMaxHyvarinenDim));
  }
  const Array& pts = dataset.points;
  const auto n = static_cast<std::size_t>(pts.rows());

  Rng split_rng(derive_seed(cfg.seed, 1));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_hold = static_cast<std::size_t>(std::floor(cfg.holdout * static_cast<double>(n)));
  if (n - n_hold < 1) n_hold = 0;
  const std::size_t n_train = n - n_hold;
  ScoreTraining out;
  out.heldout = n_hold ? gather(pts, order, n_train, n_hold) : pts;
  std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<long>(n_train));

  Vector sigma;
  if (cfg.method == Method::denoising) {
    sigma = cfg.sigma > 0.0 ? Vector::Constant(dataset.dim(), cfg.sigma).eval()
                            : (0.1 * dataset.stddev()).eval();
    for (Eigen::Index j = 0; j < sigma.size(); ++j) {
      if (!(sigma[j] > 0.0)) sigma[j] = 0.1;  // constant column
    }
  }
  out.sigma = sigma;

  ndiff::AdamState adam(cfg.lr);
  Rng rng(derive_seed(cfg.seed, 2));
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n_train);
  std::size_t cursor = n_train;  // forces a shuffle on the first step
  out.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cursor + batch > n_train) {
      std::shuffle(train.begin(), train.end(), rng);
      cursor = 0;
    }
    const Array x = gather(pts, train, cursor, batch);
    cursor += batch;

    Graph g;
    const auto p = net.bind(g);
    Var loss;
    switch (cfg.method) {
      case Method::hyvarinen: loss = hyvarinen_graph(g, net, p, x); break;
      case Method::sliced:
        loss = sliced_graph(g, net, p, x,
                            sliced_directions(x.rows(), net.dim(), cfg.projections, rng));
        break;
      case Method::denoising: {
        const Array eps = standard_normal(x.rows(), net.dim(), rng);
        const Array noisy = add_noise(x, eps, sigma);
        loss = denoising_graph(g, net, p, noisy, denoising_target(x, noisy, sigma));
        break;
      }
    }
    const double value = g.scalar(loss);
    if (!std::isfinite(value)) {
      throw TrainingError("score training diverged (loss " + std::to_string(value) +
                          ") at epoch " + std::to_string(epoch));
    }
    out.loss_trace.push_back(value);
    g.backward(loss);
    std::vector<Array> grads;
    for (Var v : p.vars()) grads.push_back(g.grad(v));
    ndiff::clip_gradients_in_place(grads, cfg.clip);
    try {
      ndiff::adam_step(net.parameters(), grads, adam);
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
    }
  }

  out.model = ScoreModel::network(net);
  out.heldout_loss = method_loss(out.model, out.heldout, cfg, sigma, derive_seed(cfg.seed, 3));
  out.net = std::move(net);
  return out;
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, trace[i]);
    f << buf;
  }
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<ScoreTraining> train_noise_levels(const data::PointCloud& dataset,
                                              const std::vector<double>& sigmas, SMConfig cfg) {
  if (sigmas.empty()) throw ArgumentError("train_noise_levels: no noise levels");
  const std::uint64_t base = cfg.seed;
  cfg.method = Method::denoising;
  std::vector<ScoreTraining> out;
  for (std::size_t l = 0; l < sigmas.size(); ++l) {
    if (!(sigmas[l] > 0.0)) throw ArgumentError("train_noise_levels: noise levels must be > 0");
    cfg.sigma = sigmas[l];
    cfg.seed = derive_seed(base, l);
    out.push_back(l == 0 ? train_score(dataset, cfg) : train_score(dataset, cfg, out.back().net));
  }
  return out;
}

}  // namespace sbmh::scorematch
