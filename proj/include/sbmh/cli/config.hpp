#pragma once

#include "sbmh/accept/accept.hpp"
#include "sbmh/cli/checkpoint.hpp"
#include "sbmh/data/point_cloud.hpp"
#include "sbmh/data/targets.hpp"
#include "sbmh/scorematch/scorematch.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sbmh::cli {

/// Everything needed to regenerate a dataset or build an analytic target.
struct DatasetSpec {
  std::string name = "moons";  // moons|pinwheel|scurve|swissroll|mixture|gev
  Eigen::Index n = 10000;
  std::optional<double> noise;  // default per dataset
  int classes = 5;
  double radial_std = 0.5;
  double tangential_std = 0.05;
  double rate = 0.25;
  double pi = 0.8;
  double xi = 0.0;
  double mu = 0.0;
  double sigma = 1.0;

  double resolved_noise() const;
  Json to_json() const;
};

std::vector<std::string> dataset_names();
data::PointCloud make_dataset(const DatasetSpec& spec, std::uint64_t seed);
/// Analytic target for mixture and gev; ArgumentError for the others.
data::AnalyticTarget make_target(const DatasetSpec& spec);

/// Named hyperparameter presets: score and acceptance training per dataset,
/// plus the frozen proposal and ULA step sizes used by the pipelines.
struct Preset {
  std::string name;
  scorematch::SMConfig score;
  accept::SBMConfig acceptance;
  double rw_sigma = 0.1;
  double mala_eps = 0.1;
  double pcn_beta = 0.1;
  double ula_eps = 0.1;
};

std::vector<std::string> preset_names();
Preset preset(const std::string& name);

/// Proposal parameter of a preset for a kernel kind.
double preset_step(const Preset& p, proposal::Kind kind);

Json to_json(const scorematch::SMConfig& c);
Json to_json(const accept::SBMConfig& c);

/// Seed from an explicit value, else SBMH_SEED, else 0. A malformed
/// SBMH_SEED is an ArgumentError.
std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed);

}  // namespace sbmh::cli
