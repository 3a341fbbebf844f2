#include "sbmh/data/point_cloud.hpp"

#include "sbmh/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

namespace sbmh::data {

PointCloud::PointCloud(Array pts, std::optional<std::vector<int>> lbl)
    : points(std::move(pts)), labels(std::move(lbl)) {}

void PointCloud::validate() const {
  if (points.rows() < 1 || points.cols() < 1) throw ArgumentError("point cloud is empty");
  if (labels && static_cast<Eigen::Index>(labels->size()) != points.rows()) {
    throw ArgumentError("point cloud has " + std::to_string(points.rows()) + " points but " +
                        std::to_string(labels->size()) + " labels");
  }
  if (!points.allFinite()) throw ArgumentError("point cloud has non-finite coordinates");
}

Vector PointCloud::mean() const { return points.colwise().mean().transpose(); }

Vector PointCloud::stddev() const {
  const RowVector mu = points.colwise().mean();
  return ((points.rowwise() - mu).array().square().colwise().mean().sqrt()).transpose();
}

namespace {

void format_double(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

void write_csv(const PointCloud& cloud, std::ostream& out) {
  cloud.validate();
  std::string buf;
  for (int j = 0; j < cloud.dim(); ++j) {
    if (j) buf += ',';
    buf += 'x' + std::to_string(j);
  }
  if (cloud.labels) buf += ",label";
  buf += '\n';
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int j = 0; j < cloud.dim(); ++j) {
      if (j) buf += ',';
      format_double(buf, cloud.points(i, j));
    }
    if (cloud.labels) {
      buf += ',';
      buf += std::to_string((*cloud.labels)[static_cast<std::size_t>(i)]);
    }
    buf += '\n';
  }
  out << buf;
}

void write_csv(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(cloud, out);
  if (!out) throw IoError("failed writing " + path.string());
}

PointCloud read_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ":1: missing header row");
  const auto header = split(trim(line));
  int dim = 0;
  bool has_label = false;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string_view h = trim(header[k]);
    if (h == "x" + std::to_string(k)) {
      if (has_label) throw ParseError(source + ":1: label column must be last");
      ++dim;
    } else if (h == "label" && k + 1 == header.size()) {
      has_label = true;
    } else {
      throw ParseError(source + ":1: unexpected header field '" + std::string(h) + "'");
    }
  }
  if (dim == 0) throw ParseError(source + ":1: header has no coordinate columns");
  const std::size_t width = static_cast<std::size_t>(dim) + (has_label ? 1 : 0);

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto fields = split(row);
    if (fields.size() != width) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    for (int j = 0; j < dim; ++j) {
      const std::string_view f = trim(fields[static_cast<std::size_t>(j)]);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": bad number '" +
                         std::string(f) + "'");
      }
      values.push_back(v);
    }
    if (has_label) {
      const std::string_view f = trim(fields.back());
      int lbl = 0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), lbl);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": bad label '" +
                         std::string(f) + "'");
      }
      labels.push_back(lbl);
    }
  }
  const auto n = static_cast<Eigen::Index>(values.size() / static_cast<std::size_t>(dim));
  if (n == 0) throw ParseError(source + ": no data rows");
  Array pts = Eigen::Map<const Array>(values.data(), n, dim);
  PointCloud cloud(std::move(pts));
  if (has_label) cloud.labels = std::move(labels);
  return cloud;
}

PointCloud read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, path.string());
}

Array subsample(const Array& points, Eigen::Index n, Rng& rng) {
  if (n >= points.rows()) return points;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first n entries are a uniform subset.
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, points.rows() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  Array out(n, points.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = points.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace sbmh::data
