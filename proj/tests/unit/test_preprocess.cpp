#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rsreg/datagen.hpp"
#include "rsreg/preprocess.hpp"

using namespace rsreg;
using rsreg::testing::gaussian_matrix;

TEST(Truncate, RuleApplication) {
  Matrix x(2, 2);
  x << 1.5, -1.5, 0.5, 2.0;
  auto [a, ra] = truncate_entries(x, 1.0);
  EXPECT_EQ(a(0, 0), 0.0);
  EXPECT_EQ(a(0, 1), 0.0);
  EXPECT_EQ(a(1, 0), 0.5);
  EXPECT_EQ(a(1, 1), 0.0);
  EXPECT_EQ(ra.affected_rows, (std::vector<Index>{0, 1}));
  auto [b, rb] = truncate_entries(x, 2.0);
  EXPECT_EQ(b(0, 1), -1.5);
  EXPECT_EQ(b(1, 1), 2.0);  // boundary is kept
  EXPECT_TRUE(rb.affected_rows.empty());
  EXPECT_EQ(rb.affected_fraction, 0.0);
}

TEST(Truncate, IdempotentAndBounded) {
  const Matrix x = 3.0 * gaussian_matrix(200, 7, 1);
  for (double tau : {0.3, 1.0, 2.5, 10.0}) {
    auto [once, r1] = truncate_entries(x, tau);
    auto [twice, r2] = truncate_entries(once, tau);
    EXPECT_EQ(once, twice);
    EXPECT_TRUE(r2.affected_rows.empty());
    EXPECT_LE(once.cwiseAbs().maxCoeff(), tau);
    // affected rows are exactly the rows holding an entry above tau
    std::vector<Index> expect;
    for (Index i = 0; i < x.rows(); ++i)
      if (x.row(i).cwiseAbs().maxCoeff() > tau) expect.push_back(i);
    EXPECT_EQ(r1.affected_rows, expect);
    EXPECT_DOUBLE_EQ(r1.affected_fraction, static_cast<double>(expect.size()) / 200.0);
  }
}

TEST(Truncate, RejectsNonPositiveTau) {
  EXPECT_THROW(truncate_entries(Matrix::Ones(2, 2), 0.0), InvalidParameter);
  EXPECT_THROW(truncate_entries(Matrix::Ones(2, 2), -1.0), InvalidParameter);
}

TEST(MomBlocks, OddAndCapped) {
  EXPECT_EQ(default_mom_blocks(10000, 0.1), 11);
  EXPECT_EQ(default_mom_blocks(10000, 0.01), 101);
  EXPECT_EQ(default_mom_blocks(16, 0.5), 3);
  for (Index n : {5, 9, 50, 1000})
    for (double e : {0.01, 0.1, 0.3}) {
      const int b = default_mom_blocks(n, e);
      EXPECT_EQ(b % 2, 1);
      EXPECT_LE(3 * b, std::max<Index>(n, 3));
    }
}

TEST(Mom, ZeroDesignGivesZero) { EXPECT_EQ(mom_covnorm_estimate(Matrix::Zero(30, 3), 5, 1.0), 0.0); }

TEST(Mom, StandardNormalRange) {
  int inside = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const Matrix x = gaussian_matrix(10000, 5, 50 + seed);
    const double est = mom_covnorm_estimate(x, default_mom_blocks(10000, 0.05), 1.0);
    inside += est >= 1.5 && est <= 2.5;
  }
  EXPECT_GE(inside, 19);
}

TEST(Mom, HomogeneousOfDegreeTwo) {
  const Matrix x = gaussian_matrix(300, 4, 3);
  const double a = mom_covnorm_estimate(x, 7, 1.0);
  EXPECT_NEAR(mom_covnorm_estimate(2.5 * x, 7, 1.0), 6.25 * a, 1e-12 * a);
  EXPECT_NEAR(mom_covnorm_estimate(x, 7, 3.0), 3.0 * a, 1e-12 * a);
}

TEST(Mom, RowOrderDoesNotMatter) {
  const Matrix x = gaussian_matrix(301, 4, 4);
  std::vector<Index> perm(301);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 17, perm.end());
  Matrix xp(301, 4);
  for (Index i = 0; i < 301; ++i) xp.row(i) = x.row(perm[i]);
  for (auto agg : {CoordinateAggregate::max, CoordinateAggregate::median})
    EXPECT_EQ(mom_covnorm_estimate(x, 9, 1.0, agg), mom_covnorm_estimate(xp, 9, 1.0, agg));
}

TEST(Mom, MedianAggregateIgnoresFewAttackedCoordinates) {
  Matrix x = gaussian_matrix(2000, 9, 5);
  const double clean = mom_covnorm_estimate(x, 11, 1.0, CoordinateAggregate::median);
  x.col(0) *= 100.0;
  x.col(1) *= 100.0;
  EXPECT_LE(mom_covnorm_estimate(x, 11, 1.0, CoordinateAggregate::median), 1.2 * clean);
  EXPECT_GE(mom_covnorm_estimate(x, 11, 1.0, CoordinateAggregate::max), 1000.0 * clean);
}

TEST(Mom, RejectsBadArguments) {
  const Matrix x = gaussian_matrix(20, 2, 6);
  EXPECT_THROW(mom_covnorm_estimate(x, 4, 1.0), InvalidParameter);
  EXPECT_THROW(mom_covnorm_estimate(x, 7, 1.0), InvalidParameter);
  EXPECT_THROW(mom_covnorm_estimate(x, 3, 0.0), InvalidParameter);
}

TEST(AutoTau, Substitution) {
  const double d = 100, delta = 0.1;
  const Index n = static_cast<Index>(std::llround(1e4 * std::log(d / delta)));
  EXPECT_NEAR(auto_tau(n, 100, 1, 1, 1.0, 1.0, delta, 0.01), 1.0, 1e-4);
  const double a = auto_tau(5000, 50, 2, 1, 1.0, 1.0, 0.1, 0.01);
  EXPECT_NEAR(auto_tau(5000, 50, 2, 1, 2.0, 1.0, 0.1, 0.01), std::sqrt(2.0) * a, 1e-12);
  // t = 2 grows like n^(1/4)
  const double b = auto_tau(5000, 50, 2, 2, 1.0, 1.0, 0.1, 0.01);
  EXPECT_NEAR(auto_tau(16 * 5000, 50, 2, 2, 1.0, 1.0, 0.1, 0.01), 2.0 * b, 1e-12);
}

TEST(AutoTau, RejectsBadArguments) {
  EXPECT_THROW(auto_tau(100, 1, 1, 1, 1.0, 1.0, 1.0, 0.01), InvalidParameter);
  EXPECT_THROW(auto_tau(100, 10, 1, 1, 0.0, 1.0, 0.1, 0.01), InvalidParameter);
  EXPECT_THROW(auto_tau(100, 10, 1, 1, 1.0, 1.0, 0.0, 0.01), InvalidParameter);
}

TEST(KappaFromSampleSize, BelowRequirementGivesOne) {
  EXPECT_EQ(kappa_from_sample_size(100000, 100, 5, 1, 4.0, 0.1, 0.1), 1.0);
  // at an absurd n the inversion is monotone in n
  const double k1 = kappa_from_sample_size(static_cast<Index>(1e18), 10, 1, 1, 4.0, 0.5, 0.5, 1e-12);
  const double k2 = kappa_from_sample_size(static_cast<Index>(4e18), 10, 1, 1, 4.0, 0.5, 0.5, 1e-12);
  EXPECT_GE(k2, k1);
  EXPECT_FALSE(sample_size_condition(100000, 100, 5, 1, 4.0, 1.0, 1.0, 1.0, 1.0, 0.1, 0.1));
}

TEST(TruncatedMean, WithinBoundOnSmallSample) {
  // unit covariance, tau = 1: |E X'|_inf <= 1
  datagen::DesignSpec s;
  s.d = 4;
  s.family = datagen::StudentT{5.0};
  const Matrix x = datagen::sample_design(s, 20000, 9);
  const auto [xt, rep] = truncate_entries(x, 1.0);
  const Vector mean = xt.colwise().mean();
  const Vector se = ((xt.rowwise() - mean.transpose()).array().square().colwise().sum() / (20000.0 * 19999.0)).sqrt();
  for (Index j = 0; j < 4; ++j) EXPECT_LE(std::abs(mean[j]), 1.0 + 4 * se[j]);
}
