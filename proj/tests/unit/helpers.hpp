#pragma once

#include <cmath>
#include <random>

#include "rsreg/huber.hpp"

namespace rsreg::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed) { return gaussian_matrix(n, 1, seed).col(0); }

// Cyclic coordinate descent for sum_i w_i (x_i b - y_i)^2 / 2 + lambda |b|_1.
inline Vector cd_lasso(const Matrix& x, const Vector& y, const Vector& w, double lambda, int sweeps = 200000) {
  const Index d = x.cols();
  Vector b = Vector::Zero(d);
  Vector r = y;
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double a = (w.array() * x.col(j).array().square()).sum();
      if (a == 0.0) continue;
      const double rho = (w.array() * x.col(j).array() * (r.array() + x.col(j).array() * b[j])).sum();
      const double nb = rho > lambda ? (rho - lambda) / a : (rho < -lambda ? (rho + lambda) / a : 0.0);
      r -= x.col(j) * (nb - b[j]);
      moved = std::max(moved, std::abs(nb - b[j]));
      b[j] = nb;
    }
    if (moved < 1e-15) break;
  }
  return b;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace rsreg::testing
