#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rsreg/linalg.hpp"

using namespace rsreg;
using namespace rsreg::linalg;
using rsreg::testing::gaussian_matrix;
using rsreg::testing::gaussian_vector;

namespace {

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix random_psd_trace(Index d, double trace, std::uint64_t seed) {
  const Matrix g = gaussian_matrix(d, d, seed);
  Matrix p = g * g.transpose();
  std::mt19937_64 rng(seed);
  return p * (std::uniform_real_distribution<double>(0, 1)(rng) * trace / p.trace());
}

}  // namespace

TEST(CappedSimplex, FeasibleAndOptimal) {
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = 2.0 * gaussian_vector(8, trial);
    const double cap = 0.5 + trial % 3;
    const Vector z = project_capped_simplex(x, cap);
    EXPECT_GE(z.minCoeff(), 0.0);
    EXPECT_LE(z.sum(), cap * (1 + 1e-12));
    std::mt19937_64 rng(trial);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 20; ++k) {
      Vector v(8);
      for (Index i = 0; i < 8; ++i) v[i] = u(rng);
      v *= cap * u(rng) / v.sum();
      EXPECT_LE((x - z).dot(v - z), 1e-10);
    }
  }
}

TEST(CappedSimplex, InteriorPointIsFixed) {
  Vector x(3);
  x << 0.1, 0.2, 0.3;
  EXPECT_LE((project_capped_simplex(x, 1.0) - x).norm(), 1e-15);
}

TEST(PsdTrace, FeasibleAndOptimal) {
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = sym(gaussian_matrix(6, 6, 100 + trial));
    const double cap = 1.0;
    const Matrix p = project_psd_trace(a, cap);
    EXPECT_LE((p - p.transpose()).norm(), 1e-12);
    EXPECT_GE(min_eigenvalue(p), -1e-12);
    EXPECT_LE(p.trace(), cap + 1e-12);
    for (int k = 0; k < 10; ++k) {
      const Matrix v = random_psd_trace(6, cap, 1000 * trial + k);
      EXPECT_LE(((a - p).cwiseProduct(v - p)).sum(), 1e-10);
    }
  }
}

TEST(Psd, ClipsNegativeEigenvalues) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 2, -1, 0.5;
  const Matrix p = project_psd(a);
  EXPECT_NEAR(p(0, 0), 2, 1e-14);
  EXPECT_NEAR(p(1, 1), 0, 1e-14);
  EXPECT_NEAR(p(2, 2), 0.5, 1e-14);
  const Matrix b = sym(gaussian_matrix(7, 7, 3));
  const Matrix q = project_psd(b);
  EXPECT_LE((project_psd(q) - q).norm(), 1e-12);
  for (int k = 0; k < 10; ++k) {
    const Matrix v = random_psd_trace(7, 10.0, 40 + k);
    EXPECT_LE(((b - q).cwiseProduct(v - q)).sum(), 1e-10);
  }
}

TEST(L1Ball, FeasibleAndOptimal) {
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = gaussian_matrix(4, 5, 200 + trial);
    Matrix p = a;
    const double r = 0.5 + trial % 4;
    project_l1_ball(p, r);
    EXPECT_LE(p.cwiseAbs().sum(), r * (1 + 1e-12));
    std::mt19937_64 rng(trial);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 20; ++k) {
      Matrix v(4, 5);
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = u(rng);
      v *= r * std::abs(u(rng)) / v.cwiseAbs().sum();
      EXPECT_LE(((a - p).cwiseProduct(v - p)).sum(), 1e-10);
    }
  }
}

TEST(L1Ball, InsideUnchanged) {
  Matrix a(1, 3);
  a << 0.1, -0.2, 0.3;
  Matrix p = a;
  project_l1_ball(p, 1.0);
  EXPECT_EQ(p, a);
}

TEST(TopEigen, AgreesWithFullDecomposition) {
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = sym(gaussian_matrix(9, 9, 300 + trial));
    const auto top = top_eigen(a);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    EXPECT_NEAR(top.value, es.eigenvalues().maxCoeff(), 1e-10);
    EXPECT_NEAR(top.vector.norm(), 1.0, 1e-12);
    EXPECT_LE((a * top.vector - top.value * top.vector).norm(), 1e-9);
    EXPECT_NEAR(max_eigenvalue(a), es.eigenvalues().maxCoeff(), 1e-10);
    EXPECT_NEAR(min_eigenvalue(a), es.eigenvalues().minCoeff(), 1e-10);
  }
}

TEST(WeightedGram, MatchesOuterProductSum) {
  const Matrix x = gaussian_matrix(12, 4, 9);
  const Vector w = gaussian_vector(12, 10).cwiseAbs();
  Matrix ref = Matrix::Zero(4, 4);
  for (Index i = 0; i < 12; ++i) ref += w[i] * x.row(i).transpose() * x.row(i);
  EXPECT_LE((weighted_gram(x, w) - ref).norm(), 1e-12);
}
