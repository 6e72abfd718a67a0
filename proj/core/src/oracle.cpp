#include "rsreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rng.hpp"
#include "rsreg/linalg.hpp"

namespace rsreg::oracle {

namespace {

double count_supports(Index d, Index s) {
  double r = 1.0;
  for (Index i = 1; i <= s; ++i) r = r * static_cast<double>(d - s + i) / static_cast<double>(i);
  return r;
}

// Visits every size-s subset of {0..d-1} in lexicographic order, or the reverse.
void for_each_support(Index d, Index s, bool reverse, const std::function<void(const std::vector<Index>&)>& fn) {
  std::vector<Index> idx(static_cast<size_t>(s));
  if (!reverse) {
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      fn(idx);
      Index i = s - 1;
      while (i >= 0 && idx[i] == d - s + i) --i;
      if (i < 0) return;
      ++idx[i];
      for (Index j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
  } else {
    for (Index j = 0; j < s; ++j) idx[j] = d - s + j;
    for (;;) {
      fn(idx);
      Index i = s - 1;
      while (i >= 0 && idx[i] == (i == 0 ? 0 : idx[i - 1] + 1)) --i;
      if (i < 0) return;
      --idx[i];
      for (Index j = i + 1; j < s; ++j) idx[j] = d - s + j;
    }
  }
}

Matrix restrict_cols(const Matrix& rows, const std::vector<Index>& sup) {
  Matrix out(rows.rows(), static_cast<Index>(sup.size()));
  for (size_t j = 0; j < sup.size(); ++j) out.col(static_cast<Index>(j)) = rows.col(sup[j]);
  return out;
}

double quartic(const Matrix& xs, const Vector& w, const Vector& u) {
  const Vector p = xs * u;
  return w.dot(p.array().square().square().matrix());
}

SparseMaxResult finish(SparseMaxResult r, Index d) {
  if (r.argmax_vector.size() == 0) {
    r.argmax_vector = Vector::Zero(d);
    r.argmax_vector[0] = 1.0;
  }
  for (Index j = 0; j < d; ++j)
    if (std::abs(r.argmax_vector[j]) > 1e-12) r.argmax_support.push_back(j);
  return r;
}

}  // namespace

SparseMaxResult sparse_moment_max(const Matrix& rows, const Vector& weights, int k, int t) {
  const Index d = rows.cols();
  if (weights.size() != rows.rows()) throw InvalidParameter("sparse_moment_max: weight length mismatch");
  if (k < 1 || d < 1) throw InvalidParameter("sparse_moment_max: k and d must be positive");
  if (t != 1 && t != 2) throw InvalidParameter("sparse_moment_max: t must be 1 or 2");
  const Index s = std::min<Index>(k, d);
  if (count_supports(d, s) > 1e5) throw InvalidParameter("sparse_moment_max: enumeration budget exceeded");

  SparseMaxResult best;
  best.value = -1.0;
  best.exact = t == 1;
  if (t == 1) {
    const Matrix a = linalg::weighted_gram(rows, weights);
    for_each_support(d, s, false, [&](const std::vector<Index>& sup) {
      Matrix sub(s, s);
      for (Index i = 0; i < s; ++i)
        for (Index j = 0; j < s; ++j) sub(i, j) = a(sup[i], sup[j]);
      const linalg::TopEigen te = linalg::top_eigen(sub);
      if (te.value > best.value) {
        best.value = te.value;
        best.argmax_vector = Vector::Zero(d);
        for (Index i = 0; i < s; ++i) best.argmax_vector[sup[i]] = te.vector[i];
      }
    });
    best.value = std::max(best.value, 0.0);
    return finish(best, d);
  }

  Index support_no = 0;
  for_each_support(d, s, false, [&](const std::vector<Index>& sup) {
    const Matrix xs = restrict_cols(rows, sup);
    auto rng = detail::make_rng(0x5eed, static_cast<std::uint64_t>(support_no++));
    std::normal_distribution<double> gauss;
    for (int start = 0; start < 32; ++start) {
      Vector u(s);
      if (start == 0) {
        u = linalg::top_eigen(linalg::weighted_gram(xs, weights)).vector;
      } else {
        for (Index i = 0; i < s; ++i) u[i] = gauss(rng);
      }
      if (!(u.norm() > 0)) continue;
      u.normalize();
      // u <- grad f(u) / |grad f(u)| never decreases a convex f on the sphere
      for (int it = 0; it < 500; ++it) {
        const Vector p = xs * u;
        const Vector g = xs.transpose() * weights.cwiseProduct(p.array().cube().matrix());
        const double gn = g.norm();
        if (!(gn > 0)) break;
        const Vector next = g / gn;
        const double change = (next - u).norm();
        u = next;
        if (change < 1e-13) break;
      }
      const double val = quartic(xs, weights, u);
      if (val > best.value) {
        best.value = val;
        best.argmax_vector = Vector::Zero(d);
        for (Index i = 0; i < s; ++i) best.argmax_vector[sup[i]] = u[i];
      }
    }
  });
  best.value = std::max(best.value, 0.0);
  return finish(best, d);
}

double sparse_moment_max_reverse(const Matrix& rows, const Vector& weights, int k) {
  const Index d = rows.cols();
  const Index s = std::min<Index>(k, d);
  if (count_supports(d, s) > 1e5) throw InvalidParameter("sparse_moment_max: enumeration budget exceeded");
  const Matrix a = linalg::weighted_gram(rows, weights);
  double best = 0.0;
  for_each_support(d, s, true, [&](const std::vector<Index>& sup) {
    Matrix sub(s, s);
    for (Index i = 0; i < s; ++i)
      for (Index j = 0; j < s; ++j) sub(i, j) = a(sup[i], sup[j]);
    best = std::max(best, linalg::max_eigenvalue(sub));
  });
  return best;
}

std::vector<Atom> elastic_decompose(const Vector& u, double k_prime, Index k_dprime, double r,
                                    const Matrix& covariance, double delta) {
  const Index d = u.size();
  if (covariance.rows() != d || covariance.cols() != d) throw InvalidParameter("elastic_decompose: covariance must be d x d");
  if (!(r > 0) || !(k_prime >= 1) || k_dprime < 1 || !(delta > 0)) {
    throw InvalidParameter("elastic_decompose: r, k', k'' and delta must be positive");
  }
  const double snorm = std::sqrt(std::max(0.0, u.dot(covariance * u)));
  if (snorm > r * (1.0 + 1e-9)) throw InvalidParameter("elastic_decompose: |Sigma^{1/2} u| exceeds r");
  if (u.lpNorm<1>() > std::sqrt(k_prime) * r * (1.0 + 1e-9)) {
    throw InvalidParameter("elastic_decompose: |u|_1 exceeds sqrt(k') r");
  }
  const double opnorm = linalg::max_eigenvalue(covariance);
  if (static_cast<double>(k_dprime) < 4.0 * k_prime * opnorm / (delta * delta)) {
    throw InvalidParameter("elastic_decompose: k'' is below 4 k' |Sigma| / delta^2");
  }

  std::vector<Index> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(u[a]) > std::abs(u[b]); });

  std::vector<Vector> parts;
  std::vector<double> norms;
  for (Index start = 0; start < d; start += k_dprime) {
    Vector part = Vector::Zero(d);
    for (Index q = start; q < std::min(d, start + k_dprime); ++q) part[order[q]] = u[order[q]];
    const double nb = std::sqrt(std::max(0.0, part.dot(covariance * part)));
    if (nb > 0) {
      parts.push_back(std::move(part));
      norms.push_back(nb);
    }
  }
  if (parts.empty()) return {{1.0, Vector::Zero(d)}};

  const double total = std::accumulate(norms.begin(), norms.end(), 0.0);
  std::vector<Atom> atoms;
  for (size_t i = 0; i < parts.size(); ++i) {
    const double p = norms[i] / total;
    atoms.push_back({p, parts[i] / p});
  }
  return atoms;
}

Vector huber_oracle_tiny(const HuberProblem& p) {
  validate_problem(p);
  const Index d = p.design.cols();
  if (d > 3) throw InvalidParameter("huber_oracle_tiny: d must be at most 3");
  auto f = [&](const Vector& b) {
    const Vector res = p.design * b - p.response;
    double s = 0.0;
    for (Index i = 0; i < res.size(); ++i) s += p.weights[i] * huber_value(res[i], p.threshold);
    return s + p.lambda * b.lpNorm<1>();
  };

  // coarse grid over a box sized by the response scale
  const double span = 2.0 * (1.0 + p.response.lpNorm<Eigen::Infinity>());
  const int pts = d == 1 ? 401 : (d == 2 ? 81 : 25);
  Vector best = Vector::Zero(d);
  double fbest = f(best);
  Vector cur(d);
  const Index total = static_cast<Index>(std::pow(pts, d));
  for (Index code = 0; code < total; ++code) {
    Index c = code;
    for (Index j = 0; j < d; ++j) {
      cur[j] = -span + 2.0 * span * static_cast<double>(c % pts) / (pts - 1);
      c /= pts;
    }
    const double v = f(cur);
    if (v < fbest) {
      fbest = v;
      best = cur;
    }
  }

  // cyclic exact line minimization; the penalty is separable so this reaches the optimum
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0.0;
    for (Index j = 0; j < d; ++j) {
      Vector b = best;
      auto phi = [&](double x) {
        b[j] = x;
        return f(b);
      };
      const double x0 = best[j];
      double step = std::max(1e-3, 1e-2 * std::abs(x0));
      double lo = x0 - step, hi = x0 + step;
      while (phi(lo) < phi(x0) && step < 1e12) {
        step *= 2;
        lo = x0 - step;
      }
      step = std::max(1e-3, 1e-2 * std::abs(x0));
      while (phi(hi) < phi(x0) && step < 1e12) {
        step *= 2;
        hi = x0 + step;
      }
      double a = lo, c = hi;
      double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
      double f1 = phi(x1), f2 = phi(x2);
      for (int it = 0; it < 200 && c - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        if (f1 <= f2) {
          c = x2;
          x2 = x1;
          f2 = f1;
          x1 = c - gr * (c - a);
          f1 = phi(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (c - a);
          f2 = phi(x2);
        }
      }
      const double xm = 0.5 * (a + c);
      double chosen = phi(xm) <= phi(x0) ? xm : x0;
      if (phi(0.0) <= phi(chosen)) chosen = 0.0;
      moved = std::max(moved, std::abs(chosen - x0));
      best[j] = chosen;
    }
    if (moved < 1e-14) break;
  }
  return best;
}

}  // namespace rsreg::oracle
