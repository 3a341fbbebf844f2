#pragma once

#include "sbmh/ndiff/array.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sbmh::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal plots: axes, tick labels at the extremes, points or polylines.
/// Scatter uses the first two columns.
std::string svg_scatter(const Array& points, const std::string& title, std::size_t max_points = 5000);
std::string svg_lines(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sbmh::cli
