#pragma once

// Central finite-difference oracles shared by the unit and acceptance suites.
// These deliberately evaluate only plain forward functions so they stay
// independent of the analytic and graph-based derivative code under test.

#include "sbmh/ndiff/array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace sbmh::testing {

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = xp[i];
    xp[i] = keep + h;
    const double fp = f(xp);
    xp[i] = keep - h;
    const double fm = f(xp);
    xp[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Finite differences over every entry of the arrays in `params`, which `f`
/// reads through the same pointers.
inline std::vector<Array> fd_parameter_gradient(const std::function<double()>& f,
                                                const std::vector<Array*>& params, double h) {
  std::vector<Array> out;
  for (Array* p : params) {
    Array g(p->rows(), p->cols());
    for (Eigen::Index i = 0; i < p->size(); ++i) {
      const double keep = p->data()[i];
      p->data()[i] = keep + h;
      const double fp = f();
      p->data()[i] = keep - h;
      const double fm = f();
      p->data()[i] = keep;
      g.data()[i] = (fp - fm) / (2.0 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline double relative_error(const Array& got, const Array& want) {
  const double denom = std::max(want.norm(), 1e-12);
  return (got - want).norm() / denom;
}

inline double relative_error(const std::vector<Array>& got, const std::vector<Array>& want) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]).squaredNorm();
    den += want[i].squaredNorm();
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

inline Array random_array(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Array a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  return a;
}

}  // namespace sbmh::testing
