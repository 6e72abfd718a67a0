#pragma once

#include "rsreg/types.hpp"

namespace rsreg::linalg {

/// Euclidean projection of x onto {z >= 0, sum z <= cap}.
Vector project_capped_simplex(const Vector& x, double cap);

/// Projection of a symmetric matrix onto {U psd, tr U <= cap}.
Matrix project_psd_trace(const Matrix& a, double cap);

/// Projection of a symmetric matrix onto the psd cone.
Matrix project_psd(const Matrix& a);

/// In-place projection of the entries of `a` onto the l1 ball of the given radius.
void project_l1_ball(Eigen::Ref<Matrix> a, double radius);

struct TopEigen {
  double value = 0.0;
  Vector vector;
};

/// Largest eigenpair of a symmetric matrix.
TopEigen top_eigen(const Matrix& a);

double max_eigenvalue(const Matrix& a);
double min_eigenvalue(const Matrix& a);

/// sum_i w_i x_i x_i^T for the rows x_i of `rows`.
Matrix weighted_gram(const Matrix& rows, const Vector& w);

}  // namespace rsreg::linalg
