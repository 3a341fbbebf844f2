#pragma once

#include "sbmh/cli/config.hpp"
#include "sbmh/metrics/metrics.hpp"
#include "sbmh/sampler/sampler.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sbmh::cli {

/// Sampling methods exposed by the CLI.
enum class Method { ula, score_rw, score_mala, score_pcn, exact_mh, taylor_mh };
Method parse_method(const std::string& s);
std::string to_string(Method m);
std::vector<std::string> method_names();
/// Proposal kind of a score-* method.
proposal::Kind method_kernel(Method m);

int scaled_epochs(int epochs, double scale);

scorematch::ScoreTraining fit_score(const Preset& p, const data::PointCloud& data,
                                    std::uint64_t seed, double scale);
accept::AcceptanceTraining fit_acceptance(const Preset& p, const data::PointCloud& data,
                                          const scorematch::ScoreModel& score,
                                          const proposal::ProposalKernel& kernel,
                                          std::uint64_t seed, double scale,
                                          std::optional<double> lambda = std::nullopt);

/// Standard normal scaled to the data's per-dimension std, centered on its mean.
sampler::InitSpec data_init(const data::PointCloud& data);

struct SamplerSpec {
  int chains = 500;
  int steps = 500;
  std::optional<int> burn_in;
  int thin = 1;
};

struct PipelineOptions {
  std::filesystem::path out_dir = "results";
  std::uint64_t seed = 0;
  int jobs = 1;
  double scale = 1.0;  // multiplies every training epoch count
  bool svg = true;
  std::vector<std::string> datasets;  // table1 only; empty means all presets
  std::vector<std::string> argv;      // recorded in manifests
};

struct Table1Result {
  std::vector<metrics::MetricsReport> rows;
  const metrics::MetricsReport* find(const std::string& dataset, const std::string& method) const;
};

struct MixtureResult {
  std::vector<std::string> methods;
  std::vector<Vector> weights;
  std::vector<double> acceptance;
};

struct LambdaSweep {
  std::vector<double> lambdas;
  std::vector<double> mean_acceptance;
};

struct StepSweep {
  std::vector<double> steps;
  std::vector<double> w1_ula;
  std::vector<double> w1_mala;
  std::vector<double> mala_acceptance;
  static double spread(const std::vector<double>& w);  // max / min
};

struct TaylorCurves {
  std::vector<double> distances;
  std::vector<std::string> variants;
  std::vector<std::vector<double>> quartic_error;   // per variant, |log r~ - log r| on -x^4
  std::vector<std::vector<double>> gaussian_error;  // per variant, on a tilted 2D Gaussian
};

Table1Result reproduce_table1(const PipelineOptions& opt,
                              std::vector<Method> methods = {Method::ula, Method::score_rw,
                                                             Method::score_mala,
                                                             Method::score_pcn});
MixtureResult reproduce_fig1(const PipelineOptions& opt);
LambdaSweep reproduce_fig4(const PipelineOptions& opt,
                           std::vector<double> lambdas = {0, 0.5, 1, 2, 4, 6, 8},
                           int epochs = 200);
StepSweep reproduce_fig5(const PipelineOptions& opt,
                         std::vector<double> steps = {0.05, 0.1, 0.2, 0.3});
TaylorCurves reproduce_figA(const PipelineOptions& opt);

std::vector<std::string> reproduce_ids();
/// Runs one pipeline into opt.out_dir / id. Unknown ids list the valid ones.
void reproduce(const std::string& id, const PipelineOptions& opt);

}  // namespace sbmh::cli
