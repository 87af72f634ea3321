// Independent reference computations used only by the tests.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "stableflow/core.hpp"

namespace stableflow::oracle {

/// Central-difference Jacobian of f at x.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

/// Central-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec grad(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    grad[j] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return grad;
}

/// max_ij |a - b| / max(|b|, floor).
inline double max_relative_error(const Mat& a, const Mat& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
  return worst;
}

/// All monotone, boundary-matched warping paths enumerated recursively.
/// `combine` folds a path's point distances (sum for DTW, max for Frechet).
inline double enumerate_paths(const std::vector<Vec>& a, const std::vector<Vec>& b,
                              const std::function<double(double, double)>& combine) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    const double here = combine(acc, (a[i] - b[j]).norm());
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, here);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, here);
    if (j + 1 < b.size()) walk(i, j + 1, here);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, here);
  };
  walk(0, 0, 0.0);
  return best;
}

inline double brute_force_dtwd(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  return enumerate_paths(a, b, [](double acc, double d) { return acc + d; });
}

inline double brute_force_frechet(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  return enumerate_paths(a, b, [](double acc, double d) { return std::max(acc, d); });
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace stableflow::oracle
