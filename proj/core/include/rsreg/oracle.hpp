#pragma once

#include <vector>

#include "rsreg/huber.hpp"

namespace rsreg::oracle {

struct SparseMaxResult {
  double value = 0.0;
  std::vector<Index> argmax_support;  // nonzero coordinates of argmax_vector
  Vector argmax_vector;
  bool exact = true;  // false for the t = 2 multi-start search, which only bounds from below
};

/**
 * max over k-sparse unit u of sum_i w_i <X_i, u>^{2t}, by enumerating supports.
 * t = 1 is exact (restricted top eigenvalues). t = 2 runs a fixed-point ascent
 * with 32 starts per support. Throws when C(d, k) exceeds 1e5.
 */
SparseMaxResult sparse_moment_max(const Matrix& rows, const Vector& weights, int k, int t);

/// Same value for t = 1, enumerating supports in the opposite order.
double sparse_moment_max_reverse(const Matrix& rows, const Vector& weights, int k);

struct Atom {
  double weight = 0.0;
  Vector vector;
};

/**
 * Writes u from the elastic ball as a convex combination of k''-sparse vectors.
 * Coordinates are sorted by magnitude and cut into consecutive blocks of size k'';
 * block i gets p_i proportional to |Sigma^{1/2} u_{B_i}| and atom u_{B_i} / p_i.
 */
std::vector<Atom> elastic_decompose(const Vector& u, double k_prime, Index k_dprime, double r,
                                    const Matrix& covariance, double delta = 0.5);

/// Minimizer of the penalized Huber objective for d <= 3 by grid search and
/// coordinate-wise golden-section refinement.
Vector huber_oracle_tiny(const HuberProblem& p);

}  // namespace rsreg::oracle
