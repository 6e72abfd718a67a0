#include "rsreg/linalg.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace rsreg::linalg {

namespace {

// theta with sum_i max(v_i - theta, 0) = target, for non-negative v summing to more than target
double simplex_threshold(std::vector<double> v, double target) {
  std::sort(v.begin(), v.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    cum += v[i];
    const double cand = (cum - target) / static_cast<double>(i + 1);
    if (i + 1 == v.size() || v[i + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  return std::max(theta, 0.0);
}

}  // namespace

Vector project_capped_simplex(const Vector& x, double cap) {
  Vector pos = x.cwiseMax(0.0);
  if (pos.sum() <= cap) return pos;
  const double theta = simplex_threshold(std::vector<double>(pos.data(), pos.data() + pos.size()), cap);
  return (x.array() - theta).cwiseMax(0.0).matrix();
}

Matrix project_psd_trace(const Matrix& a, double cap) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector lam = project_capped_simplex(es.eigenvalues(), cap);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Matrix project_psd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

void project_l1_ball(Eigen::Ref<Matrix> a, double radius) {
  const double norm = a.cwiseAbs().sum();
  if (norm <= radius) return;
  if (radius <= 0) {
    a.setZero();
    return;
  }
  std::vector<double> mags(static_cast<size_t>(a.size()));
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) mags[static_cast<size_t>(j * a.rows() + i)] = std::abs(a(i, j));
  const double theta = simplex_threshold(std::move(mags), radius);
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const double m = std::abs(a(i, j)) - theta;
      a(i, j) = m > 0 ? std::copysign(m, a(i, j)) : 0.0;
    }
  }
}

TopEigen top_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Index last = a.rows() - 1;
  return {es.eigenvalues()[last], es.eigenvectors().col(last)};
}

double max_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Matrix weighted_gram(const Matrix& rows, const Vector& w) {
  const Index d = rows.cols();
  Matrix scaled = w.cwiseSqrt().asDiagonal() * rows;
  Matrix g = Matrix::Zero(d, d);
  g.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

}  // namespace rsreg::linalg
