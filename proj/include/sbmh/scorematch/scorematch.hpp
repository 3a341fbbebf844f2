#pragma once

#include "sbmh/data/point_cloud.hpp"
#include "sbmh/ndiff/graph.hpp"
#include "sbmh/ndiff/nets.hpp"
#include "sbmh/scorematch/score_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sbmh::scorematch {

enum class Method { hyvarinen, sliced, denoising };

Method parse_method(const std::string& name);
std::string to_string(Method m);

/// Exact trace variant, limited to d <= 10 (one JVP per dimension).
inline constexpr int kMaxHyvarinenDim = 10;

/// mean_i 1/2 |s(x_i)|^2 + tr(grad s(x_i)).
double hyvarinen_loss(const ScoreModel& s, const Array& batch);

/// mean over i and m directions v ~ N(0, I) of 1/2 |s(x_i)|^2 + v^T grad s(x_i) v.
double sliced_loss(const ScoreModel& s, const Array& batch, int projections, std::uint64_t seed);

/// x~ = x + sigma * eps, target (x - x~) / sigma^2, mean_i |target_i - s(x~_i)|^2.
/// `sigma` is per dimension.
double denoising_loss(const ScoreModel& s, const Array& batch, const Vector& sigma,
                      std::uint64_t seed);
double denoising_loss(const ScoreModel& s, const Array& batch, double sigma, std::uint64_t seed);

/// grad_{x~} log N(x~ | x, diag(sigma^2)).
Array denoising_target(const Array& x, const Array& x_noisy, const Vector& sigma);

// The same objectives as graph nodes over a bound ScoreNet, so the training
// loop can differentiate them with respect to the weights. Noise is passed in
// explicitly; the draws above use the identical layout.
ndiff::Var hyvarinen_graph(ndiff::Graph& g, const ndiff::ScoreNet& net,
                           const ndiff::BoundParams& p, const Array& batch);
ndiff::Var sliced_graph(ndiff::Graph& g, const ndiff::ScoreNet& net, const ndiff::BoundParams& p,
                        const Array& batch, const std::vector<Array>& directions);
ndiff::Var denoising_graph(ndiff::Graph& g, const ndiff::ScoreNet& net,
                           const ndiff::BoundParams& p, const Array& noisy, const Array& target);

/// Draws used by sliced_loss / denoising_loss for a given seed.
std::vector<Array> sliced_directions(Eigen::Index n, int dim, int projections, Rng& rng);
Array standard_normal(Eigen::Index n, int dim, Rng& rng);

struct SMConfig {
  Method method = Method::sliced;
  int epochs = 2000;  // one epoch = one minibatch update
  double lr = 1e-3;
  int batch_size = 128;
  double sigma = 0.0;  // denoising noise; <= 0 means 0.1 x per-dimension data std
  int projections = 1;
  int hidden = 64;
  int hidden_layers = 2;
  double clip = 10.0;
  double holdout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ScoreTraining {
  ndiff::ScoreNet net;
  ScoreModel model;
  std::vector<double> loss_trace;  // training minibatch loss per epoch
  double heldout_loss = 0.0;
  Array heldout;                   // held-out points, for reporting
  Vector sigma;                    // denoising noise actually used (empty otherwise)
};

ScoreTraining train_score(const data::PointCloud& dataset, const SMConfig& cfg);

/// Continue training an existing network (used by the annealed per-level fits).
ScoreTraining train_score(const data::PointCloud& dataset, const SMConfig& cfg,
                          ndiff::ScoreNet init);

/// One denoising fit per noise level, each level warm-started from the
/// previous one. cfg.method and cfg.sigma are overridden per level; level l
/// uses seed derive_seed(cfg.seed, l).
std::vector<ScoreTraining> train_noise_levels(const data::PointCloud& dataset,
                                              const std::vector<double>& sigmas, SMConfig cfg);

/// CSV `epoch,loss`.
void write_loss_trace(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace sbmh::scorematch
