#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsreg/types.hpp"

namespace rsreg {

/**
 * The elastic constraint system in variables v (d reals) and s (d signs):
 *
 *   s_i^2 = 1,  s_i v_i >= v_i,  s_i v_i >= -v_i,  sum v_i^2 <= 1,  sum s_i v_i <= sqrt(K).
 *
 * Any unit vector with at most K nonzeros satisfies it with s_i = sign(v_i).
 */
struct ElasticSystem {
  Index d = 0;
  double K = 1.0;
  int degree = 2;  // 2 * ell
};

ElasticSystem build_elastic(Index d, double K, int ell);

/// Which constraint groups hold at a concrete point (v, s).
struct ElasticCheck {
  bool sign_square = true;
  bool sign_upper = true;  // s_i v_i >= v_i
  bool sign_lower = true;  // s_i v_i >= -v_i
  bool unit_ball = true;
  bool l1_budget = true;
  bool all() const { return sign_square && sign_upper && sign_lower && unit_ball && l1_budget; }
};

ElasticCheck check_elastic(const ElasticSystem& sys, const Vector& v, const Vector& s, double tol = 1e-12);

/**
 * Solution of one moment-maximization relaxation.
 *
 * `score_form` is the psd quadratic form used for per-row scores: the d x d
 * matrix U for t = 1 and the pair-space matrix M for t = 2 (see pair_features).
 * `moment_data` is the backend's own moment representation; for the two
 * lighter backends it coincides with `score_form`.
 *
 * `objective` is a certified upper bound on the relaxation optimum, obtained
 * from a dual feasible point. `primal_value` is the objective evaluated at
 * `score_form`, so sum_i w_i score(X_i) equals it exactly.
 */
struct PseudoExpectation {
  BackendKind kind = BackendKind::basic_sdp_t1;
  int t = 1;
  Index d = 0;
  Matrix moment_data;
  Matrix score_form;
  double objective = 0.0;
  double primal_value = 0.0;
  double feas_residual = 0.0;
  std::optional<double> gap_bound;  // empty when the solver hit its iteration cap
  int iterations = 0;
  bool exact = false;               // closed-form optimum, no iterations needed
  bool decided_early = false;       // stopped on a decision threshold
  std::vector<std::string> warnings;

  Matrix dual;  // multiplier state for warm starts
  double rho = 1.0;
};

struct SolveOptions {
  /// Stop as soon as the optimum is certified to lie below, or shown to reach, this value.
  std::optional<double> decision_threshold;
  /// Previous solution with the same t, d and backend, used to seed the iterates.
  const PseudoExpectation* warm_start = nullptr;
};

/// max E[sum_i w_i <X_i, v>^{2t}] over the backend's relaxation of the elastic system.
PseudoExpectation solve_max_moment(const Matrix& rows, const WeightVector& weights, int t, const ElasticSystem& sys,
                                   const RelaxationBackend& backend, const SolveOptions& opts = {});

/// E[<x, v>^{2t}] under the pseudo-expectation.
double score(const Vector& row, const PseudoExpectation& pe, int t);

/// Scores of every row.
Vector score_rows(const Matrix& rows, const PseudoExpectation& pe);

/// Relaxation value at uniform weights.
double certified_moment_bound(const Matrix& rows, int t, const ElasticSystem& sys, const RelaxationBackend& backend);

/// d (d + 1) / 2.
Index pair_dimension(Index d);

/// Entries x_i x_j c_ij over pairs i <= j (row-major), with c_ii = 1 and c_ij = sqrt(2).
/// <phi(x), phi(u)> = <x, u>^2.
Vector pair_features(const Vector& x);

/// sum_i w_i phi(X_i) phi(X_i)^T.
Matrix quartic_aggregate(const Matrix& rows, const Vector& w);

/// Orthogonal projection of a pair-space matrix onto the index-permutation symmetric subspace.
Matrix symmetrize_pairs(const Matrix& m, Index d);

/// Whether the full moment backend accepts this problem size.
bool full_sos_applicable(Index d, int t, int ell, const RelaxationBackend& backend);

/// Binary sidecar: magic, header fields, then moment_data in column-major order.
void dump_relaxation(const PseudoExpectation& pe, const std::filesystem::path& file);

}  // namespace rsreg
