#include "sbmh/metrics/metrics.hpp"

#include "sbmh/data/point_cloud.hpp"
#include "sbmh/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace sbmh::metrics {

namespace {

void require_nonempty(const Array& a, const char* what) {
  if (a.rows() == 0 || a.cols() == 0) throw ArgumentError(std::string(what) + " is empty");
  // A diverged chain would otherwise stall the assignment solver.
  if (!a.allFinite()) throw NumericError(std::string(what) + " has non-finite coordinates");
}

void require_same_dim(const Array& p, const Array& q) {
  require_nonempty(p, "first point cloud");
  require_nonempty(q, "second point cloud");
  if (p.cols() != q.cols()) {
    throw DimensionError("point clouds have different dimensions: " + std::to_string(p.cols()) +
                         " vs " + std::to_string(q.cols()));
  }
}

Eigen::Index resolve_n_eval(const Array& p, const Array& q, Eigen::Index n_eval) {
  const Eigen::Index cap = std::min(p.rows(), q.rows());
  if (n_eval <= 0) return cap;
  if (n_eval > cap) {
    throw ArgumentError("n_eval " + std::to_string(n_eval) + " exceeds the smaller cloud size " +
                        std::to_string(cap));
  }
  return n_eval;
}

std::pair<Array, Array> draw_subsamples(const Array& p, const Array& q, Eigen::Index n,
                                        std::uint64_t seed) {
  Rng rp(derive_seed(seed, 0)), rq(derive_seed(seed, 1));
  return {data::subsample(p, n, rp), data::subsample(q, n, rq)};
}

double transport(const Array& p, const Array& q, int order) {
  if (order != 1 && order != 2) throw ArgumentError("wasserstein order must be 1 or 2");
  const Array cost = cost_matrix(p, q, order);
  const double total = matched_cost(cost, solve_assignment(cost));
  return std::pow(std::max(0.0, total / static_cast<double>(p.rows())), 1.0 / order);
}

double kernel_sum_offdiag(const Array& a, double inv2h2) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      s += std::exp(-(a.row(i) - a.row(j)).squaredNorm() * inv2h2);
    }
  }
  return 2.0 * s;
}

}  // namespace

std::vector<int> solve_assignment(const Array& cost) {
  const auto n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("assignment needs a square cost matrix");
  if (!cost.allFinite()) throw NumericError("assignment cost matrix has non-finite entries");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> owner(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = owner[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(n);
  for (int j = 1; j <= n; ++j) match[owner[j] - 1] = j - 1;
  return match;
}

double matched_cost(const Array& cost, const std::vector<int>& match) {
  std::vector<double> c(match.size());
  for (std::size_t i = 0; i < match.size(); ++i) c[i] = cost(static_cast<Eigen::Index>(i), match[i]);
  std::sort(c.begin(), c.end());
  double s = 0.0;
  for (double e : c) s += e;
  return s;
}

Array cost_matrix(const Array& p, const Array& q, int order) {
  Array c(p.rows(), q.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      const double sq = (p.row(i) - q.row(j)).squaredNorm();
      c(i, j) = order == 2 ? sq : std::sqrt(sq);
    }
  }
  return c;
}

double wasserstein(const Array& p, const Array& q, int order, Eigen::Index n_eval,
                   std::uint64_t seed) {
  require_same_dim(p, q);
  const auto n = resolve_n_eval(p, q, n_eval);
  const auto [a, b] = draw_subsamples(p, q, n, seed);
  return transport(a, b, order);
}

double median_bandwidth(const Array& pooled) {
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
      d.push_back((pooled.row(i) - pooled.row(j)).norm());
    }
  }
  if (d.empty()) return 1.0;
  const auto mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return med > 0.0 ? med : 1.0;
}

MmdResult mmd_full(const Array& p, const Array& q, std::optional<double> bandwidth) {
  require_same_dim(p, q);
  if (p.rows() < 2 || q.rows() < 2) throw ArgumentError("mmd needs at least two points per cloud");
  double h = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ArgumentError("mmd bandwidth must be > 0");
    h = *bandwidth;
  } else {
    Array pooled(p.rows() + q.rows(), p.cols());
    pooled << p, q;
    h = median_bandwidth(pooled);
  }
  const double inv2h2 = 1.0 / (2.0 * h * h);
  const double n = static_cast<double>(p.rows()), m = static_cast<double>(q.rows());
  double cross = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      cross += std::exp(-(p.row(i) - q.row(j)).squaredNorm() * inv2h2);
    }
  }
  MmdResult r;
  r.bandwidth = h;
  r.raw = kernel_sum_offdiag(p, inv2h2) / (n * (n - 1)) +
          kernel_sum_offdiag(q, inv2h2) / (m * (m - 1)) - 2.0 * cross / (n * m);
  r.value = std::max(0.0, r.raw);
  return r;
}

MmdResult mmd(const Array& p, const Array& q, std::optional<double> bandwidth,
              Eigen::Index n_eval, std::uint64_t seed) {
  require_same_dim(p, q);
  const auto n = resolve_n_eval(p, q, n_eval);
  const auto [a, b] = draw_subsamples(p, q, n, seed);
  return mmd_full(a, b, bandwidth);
}

Vector mixture_weights(const Array& cloud, const Array& modes) {
  require_nonempty(cloud, "point cloud");
  require_nonempty(modes, "mode list");
  if (cloud.cols() != modes.cols()) throw DimensionError("modes and points differ in dimension");
  Vector w = Vector::Zero(modes.rows());
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = (cloud.row(i) - modes.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < modes.rows(); ++k) {
      const double d = (cloud.row(i) - modes.row(k)).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lower index
        best_d = d;
        best = k;
      }
    }
    w[best] += 1.0;
  }
  return w / static_cast<double>(cloud.rows());
}

double ks_statistic(const Vector& sample, const std::function<double(double)>& cdf) {
  if (sample.size() == 0) throw ArgumentError("ks statistic of an empty sample");
  std::vector<double> x(sample.data(), sample.data() + sample.size());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double statistic, Eigen::Index n) {
  if (n <= 0) throw ArgumentError("ks p-value needs n >= 1");
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

W2Convention parse_w2_convention(const std::string& s) {
  if (s == "distance") return W2Convention::distance;
  if (s == "squared") return W2Convention::squared;
  throw ArgumentError("unknown w2 convention '" + s + "' (expected distance|squared)");
}

std::string to_string(W2Convention c) {
  return c == W2Convention::squared ? "squared" : "distance";
}

MetricsReport evaluate(const Array& samples, const Array& reference, const MetricsConfig& cfg,
                       std::string dataset, std::string method) {
  require_same_dim(samples, reference);
  const auto n = resolve_n_eval(samples, reference, cfg.n_eval);
  const auto [a, b] = draw_subsamples(samples, reference, n, cfg.seed);
  MetricsReport r;
  r.dataset = std::move(dataset);
  r.method = std::move(method);
  r.w1 = transport(a, b, 1);
  r.w2 = transport(a, b, 2);
  if (cfg.w2 == W2Convention::squared) r.w2 *= r.w2;
  const auto m = mmd_full(a, b, cfg.bandwidth);
  r.mmd = m.value;
  r.bandwidth = m.bandwidth;
  r.n_eval = n;
  r.seed = cfg.seed;
  return r;
}

std::string report_header() { return "dataset,method,W1,W2,MMD,n_eval,seed,bandwidth"; }

std::string report_row(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.dataset << ',' << r.method << ',' << r.w1 << ',' << r.w2 << ','
     << r.mmd << ',' << r.n_eval << ',' << r.seed << ',' << r.bandwidth;
  return os.str();
}

void append_report(const std::filesystem::path& path, const MetricsReport& r) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (fresh) out << report_header() << '\n';
  out << report_row(r) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace sbmh::metrics
