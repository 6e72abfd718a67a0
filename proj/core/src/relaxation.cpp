#include "rsreg/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>

#include "full_sos.hpp"
#include "rsreg/linalg.hpp"

namespace rsreg {

ElasticSystem build_elastic(Index d, double K, int ell) {
  if (d < 1) throw InvalidParameter("build_elastic: d must be positive");
  if (!(K >= 1.0)) throw InvalidParameter("build_elastic: K must be >= 1");
  if (ell < 2 || ell % 2 != 0) throw InvalidParameter("build_elastic: ell must be even and >= 2");
  return {d, K, 2 * ell};
}

ElasticCheck check_elastic(const ElasticSystem& sys, const Vector& v, const Vector& s, double tol) {
  if (v.size() != sys.d || s.size() != sys.d) throw InvalidParameter("check_elastic: dimension mismatch");
  ElasticCheck c;
  for (Index i = 0; i < sys.d; ++i) {
    if (std::abs(s[i] * s[i] - 1.0) > tol) c.sign_square = false;
    if (s[i] * v[i] < v[i] - tol) c.sign_upper = false;
    if (s[i] * v[i] < -v[i] - tol) c.sign_lower = false;
  }
  c.unit_ball = v.squaredNorm() <= 1.0 + tol;
  c.l1_budget = s.dot(v) <= std::sqrt(sys.K) + tol;
  return c;
}

Index pair_dimension(Index d) { return d * (d + 1) / 2; }

Vector pair_features(const Vector& x) {
  const Index d = x.size();
  Vector phi(pair_dimension(d));
  Index p = 0;
  for (Index i = 0; i < d; ++i) {
    phi[p++] = x[i] * x[i];
    for (Index j = i + 1; j < d; ++j) phi[p++] = M_SQRT2 * x[i] * x[j];
  }
  return phi;
}

Matrix quartic_aggregate(const Matrix& rows, const Vector& w) {
  Matrix phi(rows.rows(), pair_dimension(rows.cols()));
  for (Index i = 0; i < rows.rows(); ++i) phi.row(i) = pair_features(rows.row(i).transpose()).transpose();
  return linalg::weighted_gram(phi, w);
}

namespace {

struct PairIndex {
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> coef;
};

PairIndex pair_index(Index d) {
  PairIndex pi;
  for (int i = 0; i < d; ++i) {
    pi.pairs.emplace_back(i, i);
    pi.coef.push_back(1.0);
    for (int j = i + 1; j < d; ++j) {
      pi.pairs.emplace_back(i, j);
      pi.coef.push_back(M_SQRT2);
    }
  }
  return pi;
}

// Orbit id of every pair-space entry, keyed by the sorted index quadruple.
struct SymmetryGroups {
  std::vector<int> group;   // per entry, column-major
  std::vector<double> c;    // per entry
  std::vector<double> norm; // per group: sum of c^2
};

SymmetryGroups symmetry_groups(Index d) {
  const PairIndex pi = pair_index(d);
  const Index D = static_cast<Index>(pi.pairs.size());
  SymmetryGroups g;
  g.group.resize(static_cast<size_t>(D * D));
  g.c.resize(static_cast<size_t>(D * D));
  std::map<std::uint64_t, int> ids;
  for (Index b = 0; b < D; ++b) {
    for (Index a = 0; a < D; ++a) {
      int q[4] = {pi.pairs[a].first, pi.pairs[a].second, pi.pairs[b].first, pi.pairs[b].second};
      std::sort(q, q + 4);
      const std::uint64_t key = ((static_cast<std::uint64_t>(q[0]) * 4096 + q[1]) * 4096 + q[2]) * 4096 + q[3];
      auto [it, fresh] = ids.emplace(key, static_cast<int>(ids.size()));
      if (fresh) g.norm.push_back(0.0);
      const size_t e = static_cast<size_t>(b * D + a);
      g.group[e] = it->second;
      g.c[e] = pi.coef[a] * pi.coef[b];
      g.norm[it->second] += g.c[e] * g.c[e];
    }
  }
  return g;
}

Matrix apply_symmetry(const Matrix& m, const SymmetryGroups& g) {
  std::vector<double> acc(g.norm.size(), 0.0);
  const double* src = m.data();
  for (size_t e = 0; e < g.group.size(); ++e) acc[g.group[e]] += g.c[e] * src[e];
  for (size_t k = 0; k < acc.size(); ++k) acc[k] /= g.norm[k];
  Matrix out(m.rows(), m.cols());
  double* dst = out.data();
  for (size_t e = 0; e < g.group.size(); ++e) dst[e] = g.c[e] * acc[g.group[e]];
  return out;
}

PseudoExpectation zero_solution(BackendKind kind, int t, Index d, Index dim) {
  PseudoExpectation pe;
  pe.kind = kind;
  pe.t = t;
  pe.d = d;
  pe.score_form = Matrix::Zero(dim, dim);
  pe.moment_data = pe.score_form;
  pe.gap_bound = 0.0;
  pe.exact = true;
  return pe;
}

bool decided(const std::optional<double>& thr, double ub, double lb) {
  return thr && (ub < *thr || lb >= *thr);
}

// max <A, U> over U psd, tr U <= 1, sum |U_ij| <= K.
PseudoExpectation solve_basic(const Matrix& a, double K, const RelaxationBackend& be, const SolveOptions& opts) {
  const Index d = a.rows();
  PseudoExpectation pe = zero_solution(BackendKind::basic_sdp_t1, 1, d, d);
  const linalg::TopEigen top = linalg::top_eigen(a);
  if (!(top.value > 0)) {
    pe.objective = std::max(0.0, top.value);
    return pe;
  }
  const double l1 = top.vector.lpNorm<1>();
  if (l1 * l1 <= K * (1.0 + 1e-12)) {
    pe.score_form = top.vector * top.vector.transpose();
    pe.moment_data = pe.score_form;
    pe.objective = top.value;
    pe.primal_value = top.vector.dot(a * top.vector);
    return pe;
  }

  // The trace relaxation alone already certifies lambda_max.
  const double scale = top.value;
  Matrix U0 = top.vector * top.vector.transpose() * std::min(1.0, K / (l1 * l1));
  if (decided(opts.decision_threshold, top.value, U0.cwiseProduct(a).sum())) {
    pe.exact = false;
    pe.decided_early = true;
    pe.score_form = U0;
    pe.moment_data = U0;
    pe.objective = top.value;
    pe.primal_value = U0.cwiseProduct(a).sum();
    pe.gap_bound = pe.objective - pe.primal_value;
    return pe;
  }

  const Matrix an = a / scale;
  std::optional<double> thr;
  if (opts.decision_threshold) thr = *opts.decision_threshold / scale;

  Matrix Z = U0;
  Matrix lam = Matrix::Zero(d, d);
  double rho = 1.0;
  if (opts.warm_start && opts.warm_start->kind == BackendKind::basic_sdp_t1 && opts.warm_start->d == d &&
      opts.warm_start->dual.rows() == d) {
    Z = opts.warm_start->score_form;
    lam = opts.warm_start->dual / scale;
    rho = opts.warm_start->rho;
  }

  double best_ub = 1.0;  // lambda_max of the normalized aggregate
  double best_lb = U0.cwiseProduct(an).sum();
  Matrix best_u = U0;
  Matrix best_dual = lam;
  Matrix U1 = Z;
  double r = 0.0;
  bool converged = false;
  bool early = false;
  int adapt_gap = 10, next_adapt = 0;  // residual balancing, geometrically spaced so rho settles
  int it = 0;
  for (; it < be.max_solver_iters; ++it) {
    U1 = linalg::project_psd_trace(Z - lam / rho + an / rho, 1.0);
    const Matrix zold = Z;
    Z = U1 + lam / rho;
    linalg::project_l1_ball(Z, K);
    lam += rho * (U1 - Z);
    r = (U1 - Z).norm();
    const double s = rho * (Z - zold).norm();

    if (it % 10 == 9 || it + 1 == be.max_solver_iters) {
      const double ub = std::max(0.0, linalg::max_eigenvalue(an - lam)) + K * lam.cwiseAbs().maxCoeff();
      if (ub < best_ub) {
        best_ub = ub;
        best_dual = lam;
      }
      const double l1u = U1.cwiseAbs().sum();
      const Matrix uf = l1u > K ? Matrix(U1 * (K / l1u)) : U1;
      const double lb = uf.cwiseProduct(an).sum();
      if (lb > best_lb) {
        best_lb = lb;
        best_u = uf;
      }
      if (best_ub - best_lb <= be.tol_gap * best_ub) {
        converged = true;
        break;
      }
      if (decided(thr, best_ub, best_lb)) {
        early = true;
        break;
      }
      if (it >= next_adapt && (r > 10.0 * s || s > 10.0 * r)) {
        rho *= r > s ? 2.0 : 0.5;
        adapt_gap *= 2;
        next_adapt = it + adapt_gap;
      }
    }
  }

  pe.exact = false;
  pe.iterations = it + 1;
  pe.decided_early = early;
  pe.score_form = best_u;
  pe.moment_data = best_u;
  pe.objective = best_ub * scale;
  pe.primal_value = best_u.cwiseProduct(a).sum();
  pe.feas_residual = std::max(0.0, -linalg::min_eigenvalue(best_u));
  pe.dual = best_dual * scale;
  pe.rho = rho;
  if (converged || early) {
    pe.gap_bound = std::max(0.0, pe.objective - pe.primal_value);
  } else {
    pe.warnings.push_back("basic_sdp_t1: iteration cap reached before the gap closed");
  }
  return pe;
}

// Pair-space relaxation of the quartic moment problem.
PseudoExpectation solve_lite(const Matrix& a4, Index d, double K, const RelaxationBackend& be,
                             const SolveOptions& opts) {
  const Index D = a4.rows();
  PseudoExpectation pe = zero_solution(BackendKind::lite_quartic_t2, 2, d, D);
  const double scale = linalg::max_eigenvalue(a4);
  if (!(scale > 0)) return pe;

  const double K2 = K * K;
  const SymmetryGroups groups = symmetry_groups(d);
  const Matrix an = a4 / scale;
  std::optional<double> thr;
  if (opts.decision_threshold) thr = *opts.decision_threshold / scale;
  if (thr && 1.0 < *thr) {
    // lambda_max bounds the relaxation from above.
    pe.exact = false;
    pe.decided_early = true;
    pe.objective = scale;
    pe.gap_bound = scale;
    return pe;
  }

  Matrix Z = Matrix::Zero(D, D);
  Matrix l1 = Z, l2 = Z, l3 = Z;
  double rho = 1.0;
  if (opts.warm_start && opts.warm_start->kind == BackendKind::lite_quartic_t2 && opts.warm_start->d == d &&
      opts.warm_start->dual.rows() == 3 * D) {
    Z = opts.warm_start->score_form;
    l1 = opts.warm_start->dual.topRows(D) / scale;
    l2 = opts.warm_start->dual.middleRows(D, D) / scale;
    l3 = opts.warm_start->dual.bottomRows(D) / scale;
    rho = opts.warm_start->rho;
  }

  Matrix M1 = Z, M2 = Z, M3 = Z;
  double best_ub = 1.0;
  double r = 0.0;
  bool converged = false;
  bool early = false;
  int adapt_gap = 10, next_adapt = 0;  // residual balancing, geometrically spaced so rho settles
  int it = 0;
  for (; it < be.max_solver_iters; ++it) {
    M1 = linalg::project_psd_trace(Z - l1 / rho + an / rho, 1.0);
    M2 = Z - l2 / rho;
    linalg::project_l1_ball(M2, K2);
    M3 = apply_symmetry(Z - l3 / rho, groups);
    const Matrix zold = Z;
    Z = (M1 + M2 + M3) / 3.0 + (l1 + l2 + l3) / (3.0 * rho);
    l1 += rho * (M1 - Z);
    l2 += rho * (M2 - Z);
    l3 += rho * (M3 - Z);
    r = std::sqrt((M1 - Z).squaredNorm() + (M2 - Z).squaredNorm() + (M3 - Z).squaredNorm());
    const double s = rho * std::sqrt(3.0) * (Z - zold).norm();

    if (it % 10 == 9 || it + 1 == be.max_solver_iters) {
      const Matrix y2 = -l2;
      const Matrix y3 = -l3 + apply_symmetry(l3, groups);
      const double ub = std::max(0.0, linalg::max_eigenvalue(an - y2 - y3)) + K2 * y2.cwiseAbs().maxCoeff();
      best_ub = std::min(best_ub, ub);
      const double lb = M1.cwiseProduct(an).sum();
      if (best_ub - lb <= be.tol_gap * best_ub && r <= be.tol_feas) {
        converged = true;
        break;
      }
      if (thr && best_ub < *thr) {
        early = true;
        break;
      }
      if (it >= next_adapt && (r > 10.0 * s || s > 10.0 * r)) {
        rho *= r > s ? 2.0 : 0.5;
        adapt_gap *= 2;
        next_adapt = it + adapt_gap;
      }
    }
  }

  pe.exact = false;
  pe.iterations = it + 1;
  pe.decided_early = early;
  pe.score_form = M1;
  pe.moment_data = M1;
  pe.objective = best_ub * scale;
  pe.primal_value = M1.cwiseProduct(a4).sum();
  pe.feas_residual = r;
  pe.dual.resize(3 * D, D);
  pe.dual << l1 * scale, l2 * scale, l3 * scale;
  pe.rho = rho;
  if (converged || early) {
    pe.gap_bound = std::max(0.0, pe.objective - pe.primal_value);
  } else {
    pe.warnings.push_back("lite_quartic_t2: iteration cap reached before the gap closed");
  }
  return pe;
}

}  // namespace

Matrix symmetrize_pairs(const Matrix& m, Index d) {
  if (m.rows() != pair_dimension(d) || m.cols() != m.rows()) {
    throw InvalidParameter("symmetrize_pairs: matrix must be D x D");
  }
  return apply_symmetry(m, symmetry_groups(d));
}

bool full_sos_applicable(Index d, int t, int ell, const RelaxationBackend& backend) {
  return d <= backend.full_sos_max_d && ell >= t && t <= 2 &&
         detail::full_sos_basis_size(d, ell) <= backend.full_sos_max_basis;
}

PseudoExpectation solve_max_moment(const Matrix& rows, const WeightVector& weights, int t, const ElasticSystem& sys,
                                   const RelaxationBackend& backend, const SolveOptions& opts) {
  if (weights.size() != rows.rows()) throw InvalidParameter("solve_max_moment: weight length must equal row count");
  if (rows.cols() != sys.d) throw InvalidParameter("solve_max_moment: row dimension must equal the system's d");
  if (t < 1 || t > 2) throw InvalidParameter("solve_max_moment: t must be 1 or 2");
  if (!rows.allFinite()) throw InvalidParameter("solve_max_moment: rows must be finite");

  switch (backend.kind) {
    case BackendKind::basic_sdp_t1:
      if (t != 1) throw InvalidParameter("basic_sdp_t1 supports t = 1 only");
      return solve_basic(linalg::weighted_gram(rows, weights.values()), sys.K, backend, opts);
    case BackendKind::lite_quartic_t2:
      if (t != 2) throw InvalidParameter("lite_quartic_t2 supports t = 2 only");
      if (sys.d > backend.lite_max_d) throw InvalidParameter("lite_quartic_t2: d exceeds lite_max_d");
      return solve_lite(quartic_aggregate(rows, weights.values()), sys.d, sys.K, backend, opts);
    case BackendKind::full_sos:
      if (!full_sos_applicable(sys.d, t, sys.degree / 2, backend)) {
        throw InvalidParameter("full_sos: problem exceeds the configured size cap");
      }
      return detail::solve_full_sos(rows, weights.values(), t, sys, backend, opts);
  }
  throw InternalError("unknown backend");
}

double score(const Vector& row, const PseudoExpectation& pe, int t) {
  if (t != pe.t) throw InvalidParameter("score: t does not match the pseudo-expectation");
  if (row.size() != pe.d) throw InvalidParameter("score: row dimension mismatch");
  if (t == 1) return row.dot(pe.score_form * row);
  const Vector phi = pair_features(row);
  return phi.dot(pe.score_form * phi);
}

Vector score_rows(const Matrix& rows, const PseudoExpectation& pe) {
  if (rows.cols() != pe.d) throw InvalidParameter("score_rows: row dimension mismatch");
  Vector out(rows.rows());
  if (pe.t == 1) {
    const Matrix xu = rows * pe.score_form;
    out = xu.cwiseProduct(rows).rowwise().sum();
  } else {
    for (Index i = 0; i < rows.rows(); ++i) out[i] = score(rows.row(i).transpose(), pe, 2);
  }
  return out;
}

double certified_moment_bound(const Matrix& rows, int t, const ElasticSystem& sys, const RelaxationBackend& backend) {
  return solve_max_moment(rows, WeightVector::uniform(rows.rows()), t, sys, backend).objective;
}

void dump_relaxation(const PseudoExpectation& pe, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InvalidParameter("cannot write " + file.string());
  const char magic[8] = {'R', 'S', 'R', 'E', 'G', 'P', 'E', '1'};
  out.write(magic, sizeof magic);
  const std::int32_t header[3] = {static_cast<std::int32_t>(pe.kind), pe.t, pe.iterations};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  const std::int64_t dims[3] = {pe.d, pe.moment_data.rows(), pe.moment_data.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const double vals[4] = {pe.objective, pe.primal_value, pe.feas_residual, pe.gap_bound ? *pe.gap_bound : -1.0};
  out.write(reinterpret_cast<const char*>(vals), sizeof vals);
  out.write(reinterpret_cast<const char*>(pe.moment_data.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(pe.moment_data.size())));
}

}  // namespace rsreg
