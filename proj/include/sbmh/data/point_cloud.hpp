#pragma once

#include "sbmh/ndiff/array.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace sbmh::data {

/// N x d sample matrix with optional integer labels (one per row).
struct PointCloud {
  Array points;
  std::optional<std::vector<int>> labels;

  PointCloud() = default;
  explicit PointCloud(Array pts, std::optional<std::vector<int>> lbl = std::nullopt);

  Eigen::Index size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }

  /// Throws ArgumentError unless N >= 1, labels (if any) match N, and every
  /// coordinate is finite.
  void validate() const;

  Vector mean() const;
  /// Per-dimension standard deviation (population form).
  Vector stddev() const;
};

/// Header `x0,...,x{d-1}[,label]`, one row per point, 17 significant digits.
void write_csv(const PointCloud& cloud, const std::filesystem::path& path);
void write_csv(const PointCloud& cloud, std::ostream& out);

/// Inverse of write_csv. Throws ParseError naming the offending line.
PointCloud read_csv(const std::filesystem::path& path);
PointCloud read_csv(std::istream& in, const std::string& source = "<stream>");

/// Rows of `cloud` chosen without replacement (or all rows, in order, when
/// n >= size()).
Array subsample(const Array& points, Eigen::Index n, Rng& rng);

}  // namespace sbmh::data
