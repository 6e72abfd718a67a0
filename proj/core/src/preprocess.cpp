#include "rsreg/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace rsreg {

std::pair<Matrix, TruncationReport> truncate_entries(const Matrix& design, double tau) {
  if (!(tau > 0)) throw InvalidParameter("truncate_entries: tau must be positive");
  Matrix out = design;
  TruncationReport rep;
  rep.tau = tau;
  for (Index i = 0; i < out.rows(); ++i) {
    bool touched = false;
    for (Index j = 0; j < out.cols(); ++j) {
      if (std::abs(out(i, j)) > tau) {
        out(i, j) = 0.0;
        touched = true;
      }
    }
    if (touched) rep.affected_rows.push_back(i);
  }
  rep.affected_fraction =
      out.rows() ? static_cast<double>(rep.affected_rows.size()) / static_cast<double>(out.rows()) : 0.0;
  return {std::move(out), std::move(rep)};
}

int default_mom_blocks(Index n, double epsilon) {
  double b = std::sqrt(static_cast<double>(n));
  if (epsilon > 0) b = std::min(b, 1.0 / epsilon);
  int blocks = std::max(1, static_cast<int>(std::ceil(b)));
  if (blocks % 2 == 0) ++blocks;
  while (blocks > 1 && static_cast<Index>(blocks) * 3 > n) blocks -= 2;
  return blocks;
}

double mom_covnorm_estimate(const Matrix& design, int num_blocks, double kappa_hat, CoordinateAggregate agg) {
  const Index n = design.rows();
  const Index d = design.cols();
  if (num_blocks < 1 || num_blocks % 2 == 0) throw InvalidParameter("mom: num_blocks must be odd");
  if (n < 3 * static_cast<Index>(num_blocks)) throw InvalidParameter("mom: need n >= 3 * num_blocks");
  if (!(kappa_hat > 0)) throw InvalidParameter("mom: kappa_hat must be positive");

  // Rows are ranked lexicographically and the rank is hashed to a block. The
  // ranking is unchanged by row permutations and by positive rescaling.
  std::vector<Index> order(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < d; ++j) {
      if (design(a, j) < design(b, j)) return true;
      if (design(b, j) < design(a, j)) return false;
    }
    return false;
  });
  // balanced assignment: a hashed permutation of ranks dealt round-robin; sums run in
  // this order too so the result does not depend on the input row order at all
  std::vector<std::pair<std::uint64_t, Index>> keyed(static_cast<size_t>(n));
  for (Index p = 0; p < n; ++p) keyed[p] = {detail::splitmix64(static_cast<std::uint64_t>(p) + 0x243f6a88ULL), p};
  std::sort(keyed.begin(), keyed.end());
  std::vector<Index> dealt(static_cast<size_t>(n));
  std::vector<Index> sizes(static_cast<size_t>(num_blocks), 0);
  for (Index q = 0; q < n; ++q) {
    dealt[q] = order[keyed[q].second];
    ++sizes[q % num_blocks];
  }

  std::vector<double> per_coord;
  per_coord.reserve(static_cast<size_t>(d));
  std::vector<double> sums(static_cast<size_t>(num_blocks));
  std::vector<double> means;
  for (Index j = 0; j < d; ++j) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Index q = 0; q < n; ++q) {
      const double v = design(dealt[q], j);
      sums[q % num_blocks] += v * v;
    }
    means.clear();
    for (int b = 0; b < num_blocks; ++b)
      if (sizes[b] > 0) means.push_back(sums[b] / static_cast<double>(sizes[b]));
    auto mid = means.begin() + static_cast<std::ptrdiff_t>(means.size() / 2);
    std::nth_element(means.begin(), mid, means.end());
    per_coord.push_back(*mid);
  }
  if (per_coord.empty()) return 0.0;
  double agg_value;
  if (agg == CoordinateAggregate::max) {
    agg_value = *std::max_element(per_coord.begin(), per_coord.end());
  } else {
    auto mid = per_coord.begin() + static_cast<std::ptrdiff_t>(per_coord.size() / 2);
    std::nth_element(per_coord.begin(), mid, per_coord.end());
    agg_value = *mid;
  }
  return 2.0 * kappa_hat * agg_value;
}

double auto_tau(Index n, Index d, int k, int t, double sigma_max_hat, double kappa_hat, double delta,
                double c_tau) {
  if (n <= 0 || d <= 0 || k <= 0 || t <= 0 || !(sigma_max_hat > 0) || !(kappa_hat > 0) || !(c_tau > 0)) {
    throw InvalidParameter("auto_tau: arguments must be positive");
  }
  if (!(delta > 0 && delta < 1)) throw InvalidParameter("auto_tau: delta must lie in (0, 1)");
  const double log_term = std::log(static_cast<double>(d) / delta);
  if (!(log_term > 0)) throw InvalidParameter("auto_tau: log(d/delta) must be positive");
  const double tt = static_cast<double>(t);
  const double base = static_cast<double>(n) /
                      (std::pow(kappa_hat, tt) * std::pow(static_cast<double>(k), tt) * tt * log_term);
  return std::sqrt(sigma_max_hat) * c_tau * std::pow(base, 1.0 / (2.0 * tt));
}

namespace {

double required_samples(double kappa, Index d, int k, int t, double s, double epsilon, double delta,
                        double c_const) {
  const double tt = static_cast<double>(t);
  return c_const * std::pow(10.0, 10.0 * tt) * (std::pow(kappa, 4.0 + s / (s - 2.0)) + std::pow(kappa, 2.0 * tt)) /
         std::pow(epsilon, 2.0 * tt - 1.0) * std::pow(static_cast<double>(k), 2.0 * tt) *
         std::log(static_cast<double>(d) / delta);
}

}  // namespace

double kappa_from_sample_size(Index n, Index d, int k, int t, double s, double epsilon, double delta,
                              double c_const) {
  if (!(s > 2)) throw InvalidParameter("kappa_from_sample_size: s must exceed 2");
  const double target = static_cast<double>(n);
  if (required_samples(1.0, d, k, t, s, epsilon, delta, c_const) >= target) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (required_samples(hi, d, k, t, s, epsilon, delta, c_const) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (required_samples(mid, d, k, t, s, epsilon, delta, c_const) < target ? lo : hi) = mid;
  }
  return hi;
}

bool sample_size_condition(Index n, Index d, int k, int t, double s, double m2t, double m_s, double nu,
                           double kappa, double epsilon, double delta, double c_const) {
  if (!(epsilon > 0) || !(s > 2)) return false;
  const double tt = static_cast<double>(t);
  const double moment = std::pow(m2t, 2.0 * tt) * std::pow(nu, 4.0 * tt) +
                        std::pow(1e5 * m_s, 2.0 * s / (s - 2.0));
  const double cond = std::pow(kappa, 4.0 + s / (s - 2.0)) + std::pow(kappa, 2.0 * tt);
  const double need = c_const * std::pow(10.0, 10.0 * tt) * moment * cond / std::pow(epsilon, 2.0 * tt - 1.0) *
                      std::pow(static_cast<double>(k), 2.0 * tt) * std::log(static_cast<double>(d) / delta);
  return static_cast<double>(n) >= need;
}

}  // namespace rsreg
