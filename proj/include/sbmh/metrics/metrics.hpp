#pragma once

#include "sbmh/ndiff/array.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sbmh::metrics {

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns col[i] matched to row i.
std::vector<int> solve_assignment(const Array& cost);

/// Sum of the matched costs, added in ascending order so that the value does
/// not depend on which side is the row side.
double matched_cost(const Array& cost, const std::vector<int>& match);

/// Pairwise ||p_i - q_j||^order.
Array cost_matrix(const Array& p, const Array& q, int order);

/// Order-1 or order-2 transport distance between n_eval-point subsamples
/// drawn without replacement (streams 0 and 1 of `seed`). n_eval <= 0 means
/// min(|p|, |q|).
double wasserstein(const Array& p, const Array& q, int order, Eigen::Index n_eval,
                   std::uint64_t seed);

/// Median pairwise Euclidean distance over all distinct pairs (1.0 when the
/// points coincide).
double median_bandwidth(const Array& pooled);

struct MmdResult {
  double value = 0.0;      // unbiased MMD^2 estimate, clipped at 0
  double raw = 0.0;        // unclipped estimate
  double bandwidth = 0.0;
};

/// Unbiased U-statistic of MMD^2 with k(x, y) = exp(-|x - y|^2 / (2 h^2)).
/// Without a bandwidth the median heuristic on the pooled subsample is used.
MmdResult mmd(const Array& p, const Array& q, std::optional<double> bandwidth,
              Eigen::Index n_eval, std::uint64_t seed);
/// Same estimator on the full inputs, no subsampling.
MmdResult mmd_full(const Array& p, const Array& q, std::optional<double> bandwidth);

/// Nearest-center counts normalized to sum 1. Ties go to the lowest index.
Vector mixture_weights(const Array& cloud, const Array& modes);

/// sup_x |F_n(x) - F(x)| for a 1D sample.
double ks_statistic(const Vector& sample, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail probability with the small-sample correction
/// lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D.
double ks_pvalue(double statistic, Eigen::Index n);

enum class W2Convention { distance, squared };
W2Convention parse_w2_convention(const std::string& s);
std::string to_string(W2Convention c);

struct MetricsConfig {
  Eigen::Index n_eval = 1000;
  std::uint64_t seed = 0;
  std::optional<double> bandwidth;
  W2Convention w2 = W2Convention::distance;
};

struct MetricsReport {
  std::string dataset;
  std::string method;
  double w1 = 0.0;
  double w2 = 0.0;
  double mmd = 0.0;
  Eigen::Index n_eval = 0;
  std::uint64_t seed = 0;
  double bandwidth = 0.0;
};

/// All three metrics on the same subsamples. DimensionError on mismatched
/// dims, ArgumentError on empty clouds.
MetricsReport evaluate(const Array& samples, const Array& reference, const MetricsConfig& cfg,
                       std::string dataset = "", std::string method = "");

std::string report_header();
std::string report_row(const MetricsReport& r);
/// Appends a row, writing the header first if the file is new or empty.
void append_report(const std::filesystem::path& path, const MetricsReport& r);

}  // namespace sbmh::metrics
