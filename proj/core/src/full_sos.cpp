#include "full_sos.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Sparse>

#include "rsreg/linalg.hpp"

namespace rsreg::detail {

namespace {

// First d entries: exponents of v. Last d entries: parity of s (s_i^2 = 1).
using Mono = std::vector<std::uint8_t>;
using Poly = std::vector<std::pair<Mono, double>>;

Mono mul(const Mono& a, const Mono& b, Index d) {
  Mono out(a.size());
  for (Index i = 0; i < d; ++i) out[i] = static_cast<std::uint8_t>(a[i] + b[i]);
  for (Index i = d; i < 2 * d; ++i) out[i] = a[i] ^ b[i];
  return out;
}

int degree(const Mono& m) {
  int s = 0;
  for (auto e : m) s += e;
  return s;
}

void enumerate(Index d, int max_deg, Index var, Mono& cur, int deg, std::vector<Mono>& out) {
  if (var == 2 * d) {
    out.push_back(cur);
    return;
  }
  const int cap = var < d ? max_deg - deg : std::min(1, max_deg - deg);
  for (int e = 0; e <= cap; ++e) {
    cur[var] = static_cast<std::uint8_t>(e);
    enumerate(d, max_deg, var + 1, cur, deg + e, out);
  }
  cur[var] = 0;
}

std::vector<Mono> basis_upto(Index d, int max_deg) {
  std::vector<Mono> out;
  Mono cur(static_cast<size_t>(2 * d), 0);
  enumerate(d, max_deg, 0, cur, 0, out);
  std::stable_sort(out.begin(), out.end(), [](const Mono& a, const Mono& b) { return degree(a) < degree(b); });
  return out;
}

double binom(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

class MonoTable {
 public:
  explicit MonoTable(Index d) : d_(d) { index(Mono(static_cast<size_t>(2 * d), 0)); }

  int index(const Mono& m) {
    auto [it, fresh] = ids_.emplace(m, static_cast<int>(monos_.size()));
    if (fresh) monos_.push_back(m);
    return it->second;
  }
  int size() const { return static_cast<int>(monos_.size()); }
  Index d() const { return d_; }

 private:
  Index d_;
  std::map<Mono, int> ids_;
  std::vector<Mono> monos_;
};

struct Block {
  Index m = 0;
  std::vector<Eigen::Triplet<double>> trip;  // (entry, monomial, coefficient), monomial 0 excluded
  Vector constant;                           // contribution of the constant monomial
  Eigen::SparseMatrix<double> B;
};

Block localizing(const Poly& g, const std::vector<Mono>& basis, MonoTable& table) {
  Block blk;
  blk.m = static_cast<Index>(basis.size());
  blk.constant = Vector::Zero(blk.m * blk.m);
  const Index d = table.d();
  for (Index c = 0; c < blk.m; ++c) {
    for (Index r = 0; r < blk.m; ++r) {
      const Mono ab = mul(basis[r], basis[c], d);
      for (const auto& [term, coef] : g) {
        const int id = table.index(mul(term, ab, d));
        const Index entry = r + c * blk.m;
        if (id == 0) {
          blk.constant[entry] += coef;
        } else {
          blk.trip.emplace_back(static_cast<int>(entry), id - 1, coef);
        }
      }
    }
  }
  return blk;
}

Mono unit_v(Index d, Index i) {
  Mono m(static_cast<size_t>(2 * d), 0);
  m[i] = 1;
  return m;
}

Mono unit_s(Index d, Index i) {
  Mono m(static_cast<size_t>(2 * d), 0);
  m[d + i] = 1;
  return m;
}

Matrix as_matrix(const Vector& v, Index m) { return Eigen::Map<const Matrix>(v.data(), m, m); }

}  // namespace

Index full_sos_basis_size(Index d, int ell) {
  double total = 0.0;
  for (int a = 0; a <= ell; ++a)
    for (int b = 0; a + b <= ell; ++b) total += binom(d + a - 1, a) * binom(d, b);
  return static_cast<Index>(total);
}

PseudoExpectation solve_full_sos(const Matrix& rows, const Vector& w, int t, const ElasticSystem& sys,
                                 const RelaxationBackend& be, const SolveOptions& opts) {
  const Index d = sys.d;
  const int ell = sys.degree / 2;
  MonoTable table(d);
  const std::vector<Mono> basis = basis_upto(d, ell);
  const std::vector<Mono> loc_basis = basis_upto(d, ell - 1);
  const Mono one(static_cast<size_t>(2 * d), 0);

  std::vector<Block> blocks;
  blocks.push_back(localizing({{one, 1.0}}, basis, table));
  for (Index i = 0; i < d; ++i) {
    const Mono sv = mul(unit_s(d, i), unit_v(d, i), d);
    blocks.push_back(localizing({{sv, 1.0}, {unit_v(d, i), -1.0}}, loc_basis, table));
    blocks.push_back(localizing({{sv, 1.0}, {unit_v(d, i), 1.0}}, loc_basis, table));
  }
  Poly ball{{one, 1.0}};
  Poly budget{{one, std::sqrt(sys.K)}};
  for (Index i = 0; i < d; ++i) {
    Mono vv(static_cast<size_t>(2 * d), 0);
    vv[i] = 2;
    ball.emplace_back(vv, -1.0);
    budget.emplace_back(mul(unit_s(d, i), unit_v(d, i), d), -1.0);
  }
  blocks.push_back(localizing(ball, loc_basis, table));
  blocks.push_back(localizing(budget, loc_basis, table));

  // objective sum_i w_i <X_i, v>^{2t} as coefficients on v-monomials
  std::map<int, double> cmap;
  // t = 1: quadratic-form index of y[v_i v_j];  t = 2: y[v_i v_j v_k v_l] over pair-pair entries
  std::vector<std::vector<int>> quad_idx;
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<double> pair_c;
  if (t == 1) {
    const Matrix a = linalg::weighted_gram(rows, w);
    quad_idx.assign(static_cast<size_t>(d), std::vector<int>(static_cast<size_t>(d)));
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) {
        const int id = table.index(mul(unit_v(d, i), unit_v(d, j), d));
        quad_idx[i][j] = id;
        cmap[id] += a(i, j);
      }
    }
  } else {
    for (Index i = 0; i < d; ++i) {
      pairs.emplace_back(i, i);
      pair_c.push_back(1.0);
      for (Index j = i + 1; j < d; ++j) {
        pairs.emplace_back(i, j);
        pair_c.push_back(M_SQRT2);
      }
    }
    const Index D = static_cast<Index>(pairs.size());
    quad_idx.assign(static_cast<size_t>(D), std::vector<int>(static_cast<size_t>(D)));
    for (Index p = 0; p < D; ++p) {
      for (Index q = 0; q < D; ++q) {
        const Mono m = mul(mul(unit_v(d, pairs[p].first), unit_v(d, pairs[p].second), d),
                           mul(unit_v(d, pairs[q].first), unit_v(d, pairs[q].second), d), d);
        quad_idx[p][q] = table.index(m);
      }
    }
    // <x, v>^4 = sum_pq phi_p(x) phi_q(x) c_p c_q v_i v_j v_k v_l
    const Matrix a4 = quartic_aggregate(rows, w);
    for (Index p = 0; p < D; ++p)
      for (Index q = 0; q < D; ++q) cmap[quad_idx[p][q]] += a4(p, q) * pair_c[p] * pair_c[q];
  }

  const int N = table.size() - 1;  // free moments, the constant is pinned to 1
  Vector c = Vector::Zero(N);
  for (const auto& [id, v] : cmap)
    if (id > 0) c[id - 1] += v;

  PseudoExpectation pe;
  pe.kind = BackendKind::full_sos;
  pe.t = t;
  pe.d = d;
  const Index qdim = t == 1 ? d : static_cast<Index>(pairs.size());

  Eigen::SparseMatrix<double> G(N, N);
  for (Block& b : blocks) {
    b.B.resize(b.m * b.m, N);
    b.B.setFromTriplets(b.trip.begin(), b.trip.end());
    b.trip.clear();
    b.trip.shrink_to_fit();
    G += Eigen::SparseMatrix<double>(b.B.transpose() * b.B);
  }

  const double cs = c.cwiseAbs().maxCoeff();
  if (!(cs > 0)) {
    pe.score_form = Matrix::Zero(qdim, qdim);
    pe.moment_data = Matrix::Zero(blocks[0].m, blocks[0].m);
    pe.moment_data(0, 0) = 1.0;
    pe.gap_bound = 0.0;
    pe.exact = true;
    return pe;
  }
  const Vector cn = c / cs;
  std::optional<double> thr;
  if (opts.decision_threshold) thr = *opts.decision_threshold / cs;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(G);
  if (ldlt.info() != Eigen::Success) throw InternalError("full_sos: moment normal equations are singular");

  const size_t nb = blocks.size();
  std::vector<Vector> S(nb), U(nb), Sold(nb);
  for (size_t j = 0; j < nb; ++j) {
    S[j] = Vector::Zero(blocks[j].m * blocks[j].m);
    U[j] = S[j];
  }
  Vector y = Vector::Zero(N);
  double rho = 1.0;
  double best_ub = std::numeric_limits<double>::infinity();
  Vector best_y = y;
  double r = 0.0;
  bool converged = false;
  bool early = false;
  int adapt_gap = 10, next_adapt = 0;
  int it = 0;
  for (; it < be.max_solver_iters; ++it) {
    Vector rhs = cn / rho;
    for (size_t j = 0; j < nb; ++j) rhs -= blocks[j].B.transpose() * (blocks[j].constant - S[j] + U[j]);
    y = ldlt.solve(rhs);
    double r2 = 0.0;
    Vector dual_change = Vector::Zero(N);
    for (size_t j = 0; j < nb; ++j) {
      const Index m = blocks[j].m;
      const Vector ay = blocks[j].B * y + blocks[j].constant;
      Sold[j] = S[j];
      const Matrix p = linalg::project_psd(as_matrix(Vector(ay + U[j]), m));
      S[j] = Eigen::Map<const Vector>(p.data(), m * m);
      U[j] += ay - S[j];
      r2 += (ay - S[j]).squaredNorm();
      dual_change += blocks[j].B.transpose() * (S[j] - Sold[j]);
    }
    r = std::sqrt(r2);
    const double s = rho * dual_change.norm();

    if (it % 10 == 9 || it + 1 == be.max_solver_iters) {
      // Lagrangian bound with Z_j = proj_psd(-rho U_j): the scaled multiplier of B_j y + c_j >= 0
      // converges to a negative semidefinite matrix. Every pseudo-moment lies in [-1, 1].
      double ub = 0.0;
      Vector resid = cn;
      for (size_t j = 0; j < nb; ++j) {
        const Index m = blocks[j].m;
        const Matrix z = linalg::project_psd(as_matrix(Vector(-rho * U[j]), m));
        const Eigen::Map<const Vector> zv(z.data(), m * m);
        ub += zv.dot(blocks[j].constant);
        resid += blocks[j].B.transpose() * zv;
      }
      ub += resid.cwiseAbs().sum();
      if (ub < best_ub) best_ub = ub;
      const double lb = cn.dot(y);
      if (best_ub - lb <= be.tol_gap * std::max(best_ub, 1e-12) && r <= be.tol_feas) {
        converged = true;
        best_y = y;
        break;
      }
      if (thr && best_ub < *thr) {
        early = true;
        best_y = y;
        break;
      }
      // residual balancing with geometrically spaced changes, so rho settles eventually
      if (it >= next_adapt && (r > 10.0 * s || s > 10.0 * r)) {
        const double f = r > s ? 2.0 : 0.5;
        rho *= f;
        for (auto& u : U) u /= f;
        adapt_gap *= 2;
        next_adapt = it + adapt_gap;
      }
    }
    best_y = y;
  }

  auto moment = [&](int id) { return id == 0 ? 1.0 : best_y[id - 1]; };
  Matrix q(qdim, qdim);
  for (Index a = 0; a < qdim; ++a) {
    for (Index b = 0; b < qdim; ++b) {
      const double v = moment(quad_idx[a][b]);
      q(a, b) = t == 1 ? v : pair_c[a] * pair_c[b] * v;
    }
  }
  pe.score_form = linalg::project_psd(0.5 * (q + q.transpose()));
  {
    const Index m = blocks[0].m;
    const Vector ay = blocks[0].B * best_y + blocks[0].constant;
    pe.moment_data = as_matrix(ay, m);
  }
  pe.iterations = it + 1;
  pe.decided_early = early;
  pe.objective = best_ub * cs;
  if (t == 1) {
    pe.primal_value = linalg::weighted_gram(rows, w).cwiseProduct(pe.score_form).sum();
  } else {
    pe.primal_value = quartic_aggregate(rows, w).cwiseProduct(pe.score_form).sum();
  }
  pe.feas_residual = r;
  pe.rho = rho;
  if (converged || early) {
    pe.gap_bound = std::max(0.0, pe.objective - pe.primal_value);
  } else {
    pe.warnings.push_back("full_sos: iteration cap reached before the gap closed");
  }
  return pe;
}

}  // namespace rsreg::detail
