#include "sbmh/data/generators.hpp"

#include "sbmh/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sbmh::data {

namespace {

void require_count(Eigen::Index n, const char* what) {
  if (n < 1) throw ArgumentError(std::string(what) + ": n must be >= 1");
}

void require_noise(double noise, const char* what) {
  if (!(noise >= 0.0)) throw ArgumentError(std::string(what) + ": noise must be >= 0");
}

void add_noise(Array& pts, double noise, Rng& rng) {
  if (noise == 0.0) return;
  std::normal_distribution<double> n(0.0, noise);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] += n(rng);
}

double linspace(Eigen::Index i, Eigen::Index count, double hi) {
  return count == 1 ? 0.0 : hi * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace

PointCloud make_moons(Eigen::Index n, double noise, std::uint64_t seed) {
  require_count(n, "make_moons");
  require_noise(noise, "make_moons");
  Rng rng(seed);
  const Eigen::Index n_out = n / 2;
  const Eigen::Index n_in = n - n_out;
  Array raw(n, 2);
  std::vector<int> raw_labels(static_cast<std::size_t>(n));
  const double pi = std::numbers::pi;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double t = linspace(i, n_out, pi);
    raw(i, 0) = std::cos(t);
    raw(i, 1) = std::sin(t);
    raw_labels[static_cast<std::size_t>(i)] = 0;
  }
  for (Eigen::Index i = 0; i < n_in; ++i) {
    const double t = linspace(i, n_in, pi);
    raw(n_out + i, 0) = 1.0 - std::cos(t);
    raw(n_out + i, 1) = 1.0 - std::sin(t) - 0.5;
    raw_labels[static_cast<std::size_t>(n_out + i)] = 1;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Array pts(n, 2);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    pts.row(i) = raw.row(src);
    labels[static_cast<std::size_t>(i)] = raw_labels[static_cast<std::size_t>(src)];
  }
  add_noise(pts, noise, rng);
  return PointCloud(std::move(pts), std::move(labels));
}

PointCloud make_pinwheel(Eigen::Index n, int classes, double radial_std, double tangential_std,
                         double rate, std::uint64_t seed) {
  require_count(n, "make_pinwheel");
  if (classes < 1) throw ArgumentError("make_pinwheel: need at least one class");
  if (!(radial_std >= 0.0) || !(tangential_std >= 0.0)) {
    throw ArgumentError("make_pinwheel: standard deviations must be >= 0");
  }
  Rng rng(seed);
  std::uniform_int_distribution<int> label(0, classes - 1);
  std::normal_distribution<double> unit(0.0, 1.0);
  Array pts(n, 2);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = label(rng);
    const double r = 1.0 + radial_std * unit(rng);
    const double delta = tangential_std * unit(rng);
    const double phi = 2.0 * std::numbers::pi * k / classes + rate * r;
    pts(i, 0) = r * std::cos(phi) + delta;
    pts(i, 1) = r * std::sin(phi) + delta;
    labels[static_cast<std::size_t>(i)] = k;
  }
  return PointCloud(std::move(pts), std::move(labels));
}

PointCloud make_s_curve(Eigen::Index n, double noise, std::uint64_t seed) {
  require_count(n, "make_s_curve");
  require_noise(noise, "make_s_curve");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = 3.0 * std::numbers::pi * (u(rng) - 0.5);
    const double y = 2.0 * u(rng);
    pts(i, 0) = std::sin(t);
    pts(i, 1) = y;
    pts(i, 2) = (t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0)) * (std::cos(t) - 1.0);
  }
  add_noise(pts, noise, rng);
  return PointCloud(std::move(pts));
}

PointCloud make_swiss_roll(Eigen::Index n, double noise, std::uint64_t seed) {
  require_count(n, "make_swiss_roll");
  require_noise(noise, "make_swiss_roll");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array pts(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * u(rng));
    const double y = 21.0 * u(rng);
    pts(i, 0) = t * std::cos(t);
    pts(i, 1) = y;
    pts(i, 2) = t * std::sin(t);
  }
  add_noise(pts, noise, rng);
  return PointCloud(std::move(pts));
}

}  // namespace sbmh::data
