#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rsreg/huber.hpp"
#include "rsreg/oracle.hpp"

using namespace rsreg;
using rsreg::testing::gaussian_matrix;
using rsreg::testing::gaussian_vector;

namespace {

Vector random_weights(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = u(rng) / n;
  return w;
}

Matrix random_covariance(Index d, std::uint64_t seed) {
  const Matrix g = gaussian_matrix(d, d, seed);
  Matrix s = g * g.transpose() / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
  return s / Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().maxCoeff();
}

}  // namespace

TEST(SparseMomentMax, QuadraticAgreesWithReverseEnumeration) {
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 4 + trial % 6;
    const int k = 1 + trial % 3;
    const Matrix x = gaussian_matrix(30, d, trial);
    const Vector w = random_weights(30, 50 + trial);
    const auto r = oracle::sparse_moment_max(x, w, k, 1);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.value, oracle::sparse_moment_max_reverse(x, w, k), 1e-10);
    EXPECT_LE(static_cast<int>(r.argmax_support.size()), k);
    EXPECT_NEAR(r.argmax_vector.norm(), 1.0, 1e-12);
    const Vector p = x * r.argmax_vector;
    EXPECT_NEAR(w.dot(p.cwiseProduct(p)), r.value, 1e-10);
  }
}

TEST(SparseMomentMax, DominatesRandomSparseDirections) {
  const Matrix x = gaussian_matrix(25, 6, 9);
  const Vector w = random_weights(25, 10);
  for (int t : {1, 2}) {
    const double best = oracle::sparse_moment_max(x, w, 2, t).value;
    std::mt19937_64 rng(t);
    std::uniform_int_distribution<Index> pick(0, 5);
    std::normal_distribution<double> g;
    for (int s = 0; s < 200; ++s) {
      Vector u = Vector::Zero(6);
      u[pick(rng)] = g(rng);
      u[pick(rng)] = g(rng);
      u.normalize();
      const Vector p = x * u;
      const double v = t == 1 ? w.dot(p.cwiseProduct(p)) : w.dot(p.array().pow(4).matrix());
      EXPECT_LE(v, best * (1 + 1e-9));
    }
  }
}

TEST(SparseMomentMax, Examples) {
  Matrix e1 = Matrix::Zero(5, 4);
  e1.col(0).setOnes();
  const Vector w = Vector::Constant(5, 0.2);
  EXPECT_NEAR(oracle::sparse_moment_max(e1, w, 2, 1).value, 1.0, 1e-12);
  EXPECT_NEAR(oracle::sparse_moment_max(e1, w, 2, 2).value, 1.0, 1e-12);
  EXPECT_EQ(oracle::sparse_moment_max(e1, w, 2, 1).argmax_support, std::vector<Index>{0});

  // rows sqrt(3) e1, sqrt(2) e2, e3 with weight 1/3 each give diag(1, 2/3, 1/3)
  Matrix x = Matrix::Zero(3, 3);
  x(0, 0) = std::sqrt(3.0);
  x(1, 1) = std::sqrt(2.0);
  x(2, 2) = 1.0;
  EXPECT_NEAR(oracle::sparse_moment_max(x, Vector::Constant(3, 1.0), 2, 1).value, 3.0, 1e-12);

  Matrix row(1, 3);
  row << 1.0, -2.0, 2.0;
  const auto r = oracle::sparse_moment_max(row, Vector::Constant(1, 0.5), 3, 2);
  EXPECT_NEAR(r.value, 0.5 * 81.0, 1e-9);
  EXPECT_FALSE(r.exact);
}

TEST(SparseMomentMax, RejectsBadArguments) {
  const Matrix x = gaussian_matrix(4, 40, 1);
  const Vector w = Vector::Constant(4, 0.25);
  EXPECT_THROW(oracle::sparse_moment_max(x, w, 6, 1), InvalidParameter);
  EXPECT_THROW(oracle::sparse_moment_max_reverse(x, w, 6), InvalidParameter);
  EXPECT_THROW(oracle::sparse_moment_max(x, w, 2, 3), InvalidParameter);
  EXPECT_THROW(oracle::sparse_moment_max(x, Vector::Constant(3, 0.25), 2, 1), InvalidParameter);
  EXPECT_THROW(oracle::sparse_moment_max(x, w, 0, 1), InvalidParameter);
}

TEST(ElasticDecompose, RecombinesIntoSparseAtoms) {
  const double delta = 0.5, k_prime = 2.0, r = 1.5;
  for (int c = 0; c < 5; ++c) {
    const Index d = 60;
    const Matrix cov = random_covariance(d, 100 + c);
    const Index kdd = static_cast<Index>(std::ceil(4.0 * k_prime / (delta * delta))) + 1;
    for (int trial = 0; trial < 20; ++trial) {
      Vector u = gaussian_vector(d, 1000 * c + trial).array().cube().matrix();
      const double scale = std::max(std::sqrt(u.dot(cov * u)) / r, u.lpNorm<1>() / (std::sqrt(k_prime) * r));
      u /= scale;
      const auto atoms = oracle::elastic_decompose(u, k_prime, kdd, r, cov, delta);
      Vector sum = Vector::Zero(d);
      double total = 0.0;
      for (const auto& a : atoms) {
        EXPECT_GT(a.weight, 0.0);
        EXPECT_LE((a.vector.array() != 0.0).count(), kdd);
        EXPECT_LE(std::sqrt(a.vector.dot(cov * a.vector)), (1 + delta) * r * (1 + 1e-12));
        sum += a.weight * a.vector;
        total += a.weight;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_LE((sum - u).lpNorm<Eigen::Infinity>(), 1e-12 * u.lpNorm<Eigen::Infinity>());
    }
  }
}

TEST(ElasticDecompose, SingleCoordinateIsOneAtom) {
  Vector u = Vector::Zero(10);
  u[0] = 0.7;
  const auto atoms = oracle::elastic_decompose(u, 1.0, 16, 0.7, Matrix::Identity(10, 10));
  ASSERT_EQ(atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(atoms[0].weight, 1.0);
  EXPECT_EQ(atoms[0].vector, u);
}

TEST(ElasticDecompose, RejectsViolatedPreconditions) {
  const Matrix id = Matrix::Identity(4, 4);
  Vector u = Vector::Ones(4);
  EXPECT_THROW(oracle::elastic_decompose(u, 4.0, 64, 1.0, id), InvalidParameter);  // |u| = 2 > r
  EXPECT_THROW(oracle::elastic_decompose(u, 1.0, 64, 2.0, id), InvalidParameter);  // |u|_1 = 4 > 2
  EXPECT_THROW(oracle::elastic_decompose(u, 4.0, 8, 2.0, id), InvalidParameter);   // k'' too small
  EXPECT_THROW(oracle::elastic_decompose(u, 4.0, 64, 2.0, Matrix::Identity(3, 3)), InvalidParameter);
  EXPECT_THROW(oracle::elastic_decompose(u, 4.0, 64, -1.0, id), InvalidParameter);
}

TEST(HuberOracleTiny, AgreesWithSolver) {
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 1 + trial % 2 + (trial % 5 == 0);
    const Matrix x = gaussian_matrix(5, d, 200 + trial);
    Vector y = gaussian_vector(5, 300 + trial);
    y[trial % 5] += 6.0;
    HuberProblem p{x, y, WeightVector::uniform(5), 0.05 * (trial % 4), 1.0};
    const Vector ref = oracle::huber_oracle_tiny(p);
    const auto [b, rep] = minimize(p, 1e-12, 200000);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE((b - ref).norm(), 1e-6) << trial;
    EXPECT_LE(objective(p, ref), objective(p, b) + 1e-12);
  }
}

TEST(HuberOracleTiny, HugePenaltyGivesZero) {
  const Matrix x = gaussian_matrix(5, 2, 1);
  const Vector y = gaussian_vector(5, 2);
  HuberProblem p{x, y, WeightVector::uniform(5), 1e6, 1.0};
  EXPECT_EQ(oracle::huber_oracle_tiny(p), Vector::Zero(2));
}

TEST(HuberOracleTiny, LargeThresholdIsLeastSquares) {
  const Matrix x = gaussian_matrix(6, 2, 3);
  const Vector y = gaussian_vector(6, 4);
  HuberProblem p{x, y, WeightVector::uniform(6), 0.0, 1e6};
  const Vector ls = x.colPivHouseholderQr().solve(y);
  EXPECT_LE((oracle::huber_oracle_tiny(p) - ls).norm(), 1e-7);
}

TEST(HuberOracleTiny, RejectsWideDesign) {
  const Matrix x = gaussian_matrix(5, 4, 1);
  const Vector y = gaussian_vector(5, 2);
  HuberProblem p{x, y, WeightVector::uniform(5), 0.1, 1.0};
  EXPECT_THROW(oracle::huber_oracle_tiny(p), InvalidParameter);
}
