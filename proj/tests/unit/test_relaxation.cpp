#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rsreg/linalg.hpp"
#include "rsreg/oracle.hpp"
#include "rsreg/relaxation.hpp"

using namespace rsreg;
using rsreg::testing::gaussian_matrix;
using rsreg::testing::gaussian_vector;

namespace {

RelaxationBackend backend(BackendKind kind) {
  RelaxationBackend b;
  b.kind = kind;
  return b;
}

int t_of(BackendKind kind) { return kind == BackendKind::lite_quartic_t2 ? 2 : 1; }

}  // namespace

TEST(Elastic, SparseUnitVectorIsFeasible) {
  const auto sys = build_elastic(4, 1.0, 2);
  Vector v = Vector::Zero(4), s = Vector::Ones(4);
  v[0] = 1.0;
  EXPECT_TRUE(check_elastic(sys, v, s).all());
  const auto sys3 = build_elastic(6, 3.0, 2);
  Vector u = Vector::Zero(6);
  u << 0.6, 0, -0.64, 0, 0.48, 0;
  EXPECT_TRUE(check_elastic(sys3, u, u.unaryExpr([](double x) { return x < 0 ? -1.0 : 1.0; })).all());
}

TEST(Elastic, L1BudgetViolation) {
  const double K = 1.0;
  const auto sys = build_elastic(3, K, 2);
  // unit vector with l1 norm sqrt(K) + 0.1
  const double target = std::sqrt(K) + 0.1;
  const double a = (target + std::sqrt(2.0 - target * target)) / 2.0;
  const double b = target - a;
  Vector v(3);
  v << a, b, 0.0;
  ASSERT_NEAR(v.norm(), 1.0, 1e-12);
  ASSERT_NEAR(v.lpNorm<1>(), target, 1e-12);
  const auto c = check_elastic(sys, v, Vector::Ones(3));
  EXPECT_FALSE(c.l1_budget);
  EXPECT_TRUE(c.unit_ball && c.sign_square && c.sign_upper && c.sign_lower);
}

TEST(Elastic, ZeroIsFeasibleAndWrongSignsFail) {
  for (double K : {1.0, 4.0, 10.0}) {
    const auto sys = build_elastic(5, K, 4);
    EXPECT_EQ(sys.degree, 8);
    EXPECT_TRUE(check_elastic(sys, Vector::Zero(5), -Vector::Ones(5)).all());
  }
  const auto sys = build_elastic(2, 1.0, 2);
  Vector v(2);
  v << -1.0, 0.0;
  EXPECT_FALSE(check_elastic(sys, v, Vector::Ones(2)).sign_lower);
  EXPECT_FALSE(check_elastic(sys, v, Vector::Constant(2, 0.5)).sign_square);
}

TEST(Elastic, RejectsBadParameters) {
  EXPECT_THROW(build_elastic(3, 0.5, 2), InvalidParameter);
  EXPECT_THROW(build_elastic(3, 1.0, 3), InvalidParameter);
  EXPECT_THROW(build_elastic(0, 1.0, 2), InvalidParameter);
}

TEST(PairFeatures, InnerProductIsSquaredInnerProduct) {
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = gaussian_vector(5, trial), u = gaussian_vector(5, 100 + trial);
    const Vector px = pair_features(x), pu = pair_features(u);
    EXPECT_EQ(px.size(), pair_dimension(5));
    EXPECT_NEAR(px.dot(pu), std::pow(x.dot(u), 2), 1e-10 * (1 + std::pow(x.dot(u), 2)));
  }
}

TEST(PairFeatures, SymmetrizeIsAProjection) {
  const Index d = 4, D = pair_dimension(d);
  const Matrix a = gaussian_matrix(D, D, 7);
  const Matrix p = symmetrize_pairs(a, d);
  EXPECT_LE((symmetrize_pairs(p, d) - p).norm(), 1e-12);
  // the moment matrix of a point is already symmetric
  const Vector phi = pair_features(gaussian_vector(d, 8));
  const Matrix m = phi * phi.transpose();
  EXPECT_LE((symmetrize_pairs(m, d) - m).norm(), 1e-12);
}

TEST(SolveMaxMoment, AllRowsAlongFirstAxis) {
  Matrix rows = Matrix::Zero(5, 3);
  rows.col(0).setOnes();
  const auto pe = solve_max_moment(rows, WeightVector::uniform(5), 1, build_elastic(3, 1.0, 2),
                                   backend(BackendKind::basic_sdp_t1));
  EXPECT_NEAR(pe.objective, 1.0, 1e-6);
}

TEST(SolveMaxMoment, IdentityAggregateHasValueOne) {
  for (double K : {1.0, 2.0, 5.0}) {
    const Matrix rows = std::sqrt(3.0) * Matrix::Identity(3, 3);
    for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::full_sos}) {
      const auto pe = solve_max_moment(rows, WeightVector::uniform(3), 1, build_elastic(3, K, 2), backend(kind));
      EXPECT_NEAR(pe.objective, 1.0, 1e-4) << to_string(kind) << " K " << K;
    }
  }
}

TEST(SolveMaxMoment, DiagonalAggregateMatchesSupportEnumeration) {
  Matrix rows(2, 2);
  rows << 2.0, 0.0, 0.0, std::sqrt(2.0);  // aggregate diag(2, 1) at uniform weights
  const Vector w = Vector::Constant(2, 0.5);
  const double oracle_value = oracle::sparse_moment_max(rows, w, 2, 1).value;
  EXPECT_NEAR(oracle_value, 2.0, 1e-12);
  for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::full_sos}) {
    const auto pe = solve_max_moment(rows, WeightVector::uniform(2), 1, build_elastic(2, 2.0, 2), backend(kind));
    EXPECT_NEAR(pe.objective, oracle_value, 1e-4 * oracle_value) << to_string(kind);
  }
}

TEST(SolveMaxMoment, SoundAgainstOneSparseAndBruteForce) {
  for (int trial = 0; trial < 12; ++trial) {
    const Index d = 3 + trial % 2;
    const int k = 1 + trial % 3;
    Matrix rows = gaussian_matrix(40, d, 500 + trial);
    rows.row(trial % 40) *= 6.0;
    const Vector w = Vector::Constant(40, 1.0 / 40);
    for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::lite_quartic_t2, BackendKind::full_sos}) {
      for (int t : {1, 2}) {
        if (kind != BackendKind::full_sos && t != t_of(kind)) continue;
        RelaxationBackend be = backend(kind);
        if (kind == BackendKind::full_sos && (t == 2 || !full_sos_applicable(d, t, 2 * t, be))) continue;
        const auto pe = solve_max_moment(rows, WeightVector::uniform(40), t, build_elastic(d, k, 2 * t), be);
        double one_sparse = 0.0;
        for (Index j = 0; j < d; ++j) one_sparse = std::max(one_sparse, (w.array() * rows.col(j).array().pow(2 * t)).sum());
        const double brute = oracle::sparse_moment_max(rows, w, k, t).value;
        EXPECT_GE(pe.objective, one_sparse * (1 - 1e-6)) << to_string(kind) << " d " << d << " t " << t;
        EXPECT_GE(pe.objective, brute * (1 - 1e-6)) << to_string(kind) << " d " << d << " t " << t;
      }
    }
  }
}

TEST(SolveMaxMoment, MomentDataIsPsdAndScoresSumToPrimal) {
  for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::lite_quartic_t2, BackendKind::full_sos}) {
    const int t = t_of(kind);
    const Index d = kind == BackendKind::full_sos ? 4 : 7;
    Matrix rows = gaussian_matrix(50, d, 31);
    rows.row(3) *= 8.0;
    Vector wv = Vector::Constant(50, 1.0 / 50);
    wv.head(10) *= 0.3;
    const WeightVector w(wv);
    const RelaxationBackend be = backend(kind);
    const auto pe = solve_max_moment(rows, w, t, build_elastic(d, 2.0, 2 * t), be);
    EXPECT_GE(linalg::min_eigenvalue(pe.moment_data), -be.tol_feas) << to_string(kind);
    EXPECT_GE(linalg::min_eigenvalue(pe.score_form), -be.tol_feas) << to_string(kind);
    const Vector sc = score_rows(rows, pe);
    EXPECT_GE(sc.minCoeff(), -be.tol_feas);
    const double maxrow = rows.rowwise().norm().maxCoeff();
    EXPECT_NEAR(wv.dot(sc), pe.primal_value, be.tol_feas * 50 * std::pow(maxrow, 2 * t)) << to_string(kind);
    EXPECT_GE(pe.objective, pe.primal_value * (1 - be.tol_gap) - be.tol_feas) << to_string(kind);
    ASSERT_TRUE(pe.gap_bound.has_value()) << to_string(kind);
  }
}

TEST(SolveMaxMoment, HomogeneousInRowScale) {
  for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::lite_quartic_t2}) {
    const int t = t_of(kind);
    const RelaxationBackend be = backend(kind);
    const Matrix rows = gaussian_matrix(60, 6, 41);
    const auto sys = build_elastic(6, 2.0, 2 * t);
    const double a = solve_max_moment(rows, WeightVector::uniform(60), t, sys, be).objective;
    const double c = 3.0;
    const double b = solve_max_moment(c * rows, WeightVector::uniform(60), t, sys, be).objective;
    EXPECT_NEAR(b / std::pow(c, 2 * t), a, 2 * be.tol_gap * a) << to_string(kind);
  }
}

TEST(SolveMaxMoment, NonDecreasingInK) {
  for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::lite_quartic_t2}) {
    const int t = t_of(kind);
    const RelaxationBackend be = backend(kind);
    const Matrix rows = gaussian_matrix(60, 6, 51) + 0.8 * Matrix::Ones(60, 6);
    double prev = 0.0;
    for (double K : {1.0, 1.5, 2.0, 3.0, 6.0}) {
      const double v = solve_max_moment(rows, WeightVector::uniform(60), t, build_elastic(6, K, 2 * t), be).objective;
      EXPECT_GE(v, prev * (1 - be.tol_gap)) << to_string(kind) << " K " << K;
      prev = v;
    }
  }
}

TEST(SolveMaxMoment, FullSosNotAboveLite) {
  // full_sos has more constraints; checked empirically on small instances
  for (int trial = 0; trial < 3; ++trial) {
    const Index d = 2;
    Matrix rows = gaussian_matrix(30, d, 61 + trial);
    rows.row(0) *= 4.0;
    const auto sys = build_elastic(d, 1.5, 4);
    RelaxationBackend full = backend(BackendKind::full_sos);
    ASSERT_TRUE(full_sos_applicable(d, 2, 2, full));
    const RelaxationBackend lite = backend(BackendKind::lite_quartic_t2);
    const double vf = solve_max_moment(rows, WeightVector::uniform(30), 2, sys, full).objective;
    const double vl = solve_max_moment(rows, WeightVector::uniform(30), 2, sys, lite).objective;
    EXPECT_LE(vf, vl * (1 + 2 * lite.tol_gap)) << d;
  }
}

TEST(SolveMaxMoment, BackendRestrictions) {
  const Matrix rows = gaussian_matrix(10, 3, 1);
  const auto sys1 = build_elastic(3, 1.0, 2);
  EXPECT_THROW(solve_max_moment(rows, WeightVector::uniform(10), 2, sys1, backend(BackendKind::basic_sdp_t1)),
               InvalidParameter);
  EXPECT_THROW(solve_max_moment(rows, WeightVector::uniform(10), 1, sys1, backend(BackendKind::lite_quartic_t2)),
               InvalidParameter);
  EXPECT_THROW(solve_max_moment(rows, WeightVector::uniform(9), 1, sys1, backend(BackendKind::basic_sdp_t1)),
               InvalidParameter);
  RelaxationBackend big = backend(BackendKind::full_sos);
  EXPECT_THROW(solve_max_moment(gaussian_matrix(10, 12, 2), WeightVector::uniform(10), 1, build_elastic(12, 1.0, 2),
                                big),
               InvalidParameter);
}

TEST(SolveMaxMoment, WarmStartGivesSameValue) {
  const Matrix rows = gaussian_matrix(80, 8, 71) + 0.5 * Matrix::Ones(80, 8);
  for (auto kind : {BackendKind::basic_sdp_t1, BackendKind::lite_quartic_t2}) {
    const int t = t_of(kind);
    const RelaxationBackend be = backend(kind);
    const auto sys = build_elastic(8, 2.0, 2 * t);
    const auto cold = solve_max_moment(rows, WeightVector::uniform(80), t, sys, be);
    Vector w = Vector::Constant(80, 1.0 / 80);
    w[0] = 0.0;
    SolveOptions opts;
    opts.warm_start = &cold;
    const auto warm = solve_max_moment(rows, WeightVector(w), t, sys, be, opts);
    const auto fresh = solve_max_moment(rows, WeightVector(w), t, sys, be);
    EXPECT_NEAR(warm.objective, fresh.objective, 3 * be.tol_gap * fresh.objective) << to_string(kind);
  }
}

TEST(SolveMaxMoment, DecisionThresholdStopsEarly) {
  const Matrix rows = gaussian_matrix(80, 8, 81) + 0.5 * Matrix::Ones(80, 8);
  const auto sys = build_elastic(8, 2.0, 2);
  const RelaxationBackend be = backend(BackendKind::basic_sdp_t1);
  const auto full = solve_max_moment(rows, WeightVector::uniform(80), 1, sys, be);
  SolveOptions below;
  below.decision_threshold = 100.0 * full.objective;
  const auto a = solve_max_moment(rows, WeightVector::uniform(80), 1, sys, be, below);
  EXPECT_TRUE(a.decided_early);
  EXPECT_LT(a.objective, *below.decision_threshold);
  SolveOptions above;
  above.decision_threshold = 0.01 * full.objective;
  const auto b = solve_max_moment(rows, WeightVector::uniform(80), 1, sys, be, above);
  EXPECT_GE(b.objective, *above.decision_threshold);
}

TEST(Score, QuadraticForm) {
  PseudoExpectation pe;
  pe.t = 1;
  pe.d = 2;
  pe.score_form = Matrix::Zero(2, 2);
  pe.score_form(0, 0) = 1.0;
  Vector row(2);
  row << 3.0, 0.0;
  EXPECT_EQ(score(row, pe, 1), 9.0);
  EXPECT_EQ(score(Vector::Zero(2), pe, 1), 0.0);
  EXPECT_THROW(score(Vector::Zero(3), pe, 1), InvalidParameter);
  EXPECT_THROW(score(row, pe, 2), InvalidParameter);
}

TEST(CertifiedBound, MatchesUniformSolveAndGrowsWithOutlier) {
  Matrix rows = gaussian_matrix(100, 10, 91);
  const auto sys = build_elastic(10, 4.0, 2);
  const RelaxationBackend be = backend(BackendKind::basic_sdp_t1);
  const double b = certified_moment_bound(rows, 1, sys, be);
  EXPECT_EQ(b, solve_max_moment(rows, WeightVector::uniform(100), 1, sys, be).objective);
  Matrix more(101, 10);
  more << rows, Matrix::Zero(1, 10);
  more(100, 0) = 1e3;
  EXPECT_GT(certified_moment_bound(more, 1, sys, be), b);
}

TEST(Dump, WritesHeaderAndMoments) {
  const Matrix rows = gaussian_matrix(20, 3, 5);
  const auto pe = solve_max_moment(rows, WeightVector::uniform(20), 1, build_elastic(3, 1.0, 2),
                                   backend(BackendKind::basic_sdp_t1));
  const auto file = std::filesystem::temp_directory_path() / "rsreg_dump_test.bin";
  dump_relaxation(pe, file);
  std::ifstream in(file, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "RSREGPE1");
  EXPECT_EQ(std::filesystem::file_size(file), 8 + 12 + 24 + 32 + 8 * static_cast<std::uintmax_t>(pe.moment_data.size()));
  std::filesystem::remove(file);
}
