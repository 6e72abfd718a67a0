#pragma once

#include <utility>
#include <vector>

#include "rsreg/types.hpp"

namespace rsreg {

struct TruncationReport {
  double tau = 0.0;
  std::vector<Index> affected_rows;  // rows with at least one entry set to zero
  double affected_fraction = 0.0;
};

/// X'_ij = X_ij if |X_ij| <= tau, else 0.
std::pair<Matrix, TruncationReport> truncate_entries(const Matrix& design, double tau);

/// Default median-of-means block count: ceil(min(sqrt(n), 1/eps)) rounded up to odd.
int default_mom_blocks(Index n, double epsilon);

/// How per-coordinate median-of-means values are combined.
enum class CoordinateAggregate { max, median };

/**
 * Median-of-means scale estimate 2 * kappa_hat * agg_j median_b(mean_{i in b} X_ij^2).
 *
 * With agg = max this covers ||Sigma|| whenever kappa_hat >= 1. With agg = median a
 * handful of attacked coordinates cannot move the estimate; kappa_hat >= kappa(Sigma)
 * still gives coverage because every diagonal entry is at least ||Sigma|| / kappa.
 *
 * Block membership does not depend on row order or on a positive rescaling of the design.
 */
double mom_covnorm_estimate(const Matrix& design, int num_blocks, double kappa_hat,
                            CoordinateAggregate agg = CoordinateAggregate::max);

/// sqrt(sigma_max_hat) * c_tau * (n / (kappa^t k^t t log(d/delta)))^(1/(2t)).
double auto_tau(Index n, Index d, int k, int t, double sigma_max_hat, double kappa_hat, double delta,
                double c_tau);

/**
 * Smallest kappa_hat >= 1 with required_samples(kappa_hat) >= n, where
 * required_samples(kappa) = C 10^(10t) (kappa^(4 + s/(s-2)) + kappa^(2t)) / eps^(2t-1) k^(2t) log(d/delta).
 * Returns 1 when n is below the kappa = 1 requirement (the usual case at small n).
 */
double kappa_from_sample_size(Index n, Index d, int k, int t, double s, double epsilon, double delta,
                              double c_const = 1.0);

/// Whether n meets the heavy-tailed sample-size display (with M_s, nu, kappa plugged in).
bool sample_size_condition(Index n, Index d, int k, int t, double s, double m2t, double m_s, double nu,
                           double kappa, double epsilon, double delta, double c_const = 1.0);

}  // namespace rsreg
