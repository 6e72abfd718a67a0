#pragma once

#include <limits>
#include <utility>

#include "rsreg/types.hpp"

namespace rsreg {

/// h(x) = x^2 / 2 for |x| <= threshold, threshold |x| - threshold^2 / 2 otherwise.
double huber_value(double x, double threshold);
/// phi(x) = h'(x), i.e. x clipped to [-threshold, threshold].
double huber_deriv(double x, double threshold);

/**
 * L_w(beta) = sum_i w_i h(<X_i, beta> - y_i) + lambda |beta|_1.
 *
 * Holds references: the design and response must outlive the problem.
 * A threshold of +infinity gives the weighted Lasso.
 */
struct HuberProblem {
  const Matrix& design;
  const Vector& response;
  WeightVector weights;
  double lambda = 0.0;
  double threshold = 2.0;
};

void validate_problem(const HuberProblem& p);

/// Smooth part and its gradient at beta (penalty excluded).
std::pair<double, Vector> loss_and_grad(const HuberProblem& p, const Vector& beta);

/// Smooth part plus lambda |beta|_1.
double objective(const HuberProblem& p, const Vector& beta);

/// Infinity-norm distance from -grad H_w(beta) to lambda * subdifferential of |beta|_1.
double kkt_residual(const HuberProblem& p, const Vector& beta);

/// c_lambda * m2t * sqrt(sigma_max_hat) * eps^(1 - 1/(2t)) / sqrt(k).
double lambda_default(double m2t, double sigma_max_hat, double epsilon, int k, int t, double c_lambda);

struct SolveReport {
  int iterations = 0;
  double final_objective = 0.0;
  double kkt_residual = 0.0;
  double step_size_used = 0.0;
  bool converged = false;
};

/// Accelerated proximal gradient with backtracking and gradient-based restart.
/// Returns the final iterate once the KKT residual is met, otherwise the best point seen.
std::pair<Vector, SolveReport> minimize(const HuberProblem& p, double tol_kkt = 1e-8, int max_iters = 50000,
                                        const Vector* start = nullptr);

}  // namespace rsreg
