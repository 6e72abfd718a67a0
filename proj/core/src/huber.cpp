#include "rsreg/huber.hpp"

#include <algorithm>
#include <cmath>

namespace rsreg {

double huber_value(double x, double threshold) {
  const double a = std::abs(x);
  return a <= threshold ? 0.5 * x * x : threshold * a - 0.5 * threshold * threshold;
}

double huber_deriv(double x, double threshold) { return std::clamp(x, -threshold, threshold); }

void validate_problem(const HuberProblem& p) {
  if (p.response.size() != p.design.rows()) throw InvalidParameter("huber: response length must equal row count");
  if (p.weights.size() != p.design.rows()) throw InvalidParameter("huber: weight length must equal row count");
  if (!(p.lambda >= 0)) throw InvalidParameter("huber: lambda must be non-negative");
  if (!(p.threshold > 0)) throw InvalidParameter("huber: threshold must be positive");
}

namespace {

double smooth_at(const HuberProblem& p, const Vector& fitted) {
  const Vector& w = p.weights.values();
  double s = 0.0;
  for (Index i = 0; i < fitted.size(); ++i) s += w[i] * huber_value(fitted[i] - p.response[i], p.threshold);
  return s;
}

Vector grad_at(const HuberProblem& p, const Vector& fitted) {
  const Vector& w = p.weights.values();
  Vector r(fitted.size());
  for (Index i = 0; i < fitted.size(); ++i) r[i] = w[i] * huber_deriv(fitted[i] - p.response[i], p.threshold);
  return p.design.transpose() * r;
}

double bregman_at(const HuberProblem& p, const Vector& fy, const Vector& fz) {
  const Vector& w = p.weights.values();
  double s = 0.0;
  for (Index i = 0; i < fy.size(); ++i) {
    const double ry = fy[i] - p.response[i], rz = fz[i] - p.response[i], dr = fz[i] - fy[i];
    const double c = p.threshold;
    double b;
    if (std::abs(ry) <= c && std::abs(rz) <= c) {
      b = 0.5 * dr * dr;
    } else if ((ry > c && rz > c) || (ry < -c && rz < -c)) {
      b = 0.0;
    } else {
      b = huber_value(rz, c) - huber_value(ry, c) - huber_deriv(ry, c) * dr;
    }
    s += w[i] * b;
  }
  return s;
}

// sum_i w_i (h(r_to) - h(r_from)) evaluated from the fitted-value differences, which stay
// accurate when the two objectives agree to more digits than a double holds
double smooth_change(const HuberProblem& p, const Vector& from, const Vector& to) {
  const Vector& w = p.weights.values();
  const double c = p.threshold;
  double s = 0.0;
  for (Index i = 0; i < from.size(); ++i) {
    const double ra = from[i] - p.response[i], rb = to[i] - p.response[i], dr = to[i] - from[i];
    double h;
    if (std::abs(ra) <= c && std::abs(rb) <= c) {
      h = 0.5 * dr * (ra + rb);
    } else if (ra > c && rb > c) {
      h = c * dr;
    } else if (ra < -c && rb < -c) {
      h = -c * dr;
    } else {
      h = huber_value(rb, c) - huber_value(ra, c);
    }
    s += w[i] * h;
  }
  return s;
}

double kkt_from_grad(const Vector& g, const Vector& beta, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] != 0.0 ? std::abs(g[j] + lambda * (beta[j] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

Vector soft_threshold(const Vector& x, double t) {
  return x.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

// Power iteration for the top eigenvalue of X^T W X.
double lipschitz_estimate(const HuberProblem& p) {
  const Index d = p.design.cols();
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  double est = 0.0;
  for (int it = 0; it < 50; ++it) {
    const Vector xv = p.design * v;
    const Vector u = p.design.transpose() * p.weights.values().cwiseProduct(xv);
    const double nrm = u.norm();
    if (!(nrm > 0)) return 0.0;
    if (std::abs(nrm - est) <= 1e-6 * nrm) {
      est = nrm;
      break;
    }
    est = nrm;
    v = u / nrm;
  }
  return est * 1.05;
}

}  // namespace

std::pair<double, Vector> loss_and_grad(const HuberProblem& p, const Vector& beta) {
  validate_problem(p);
  if (beta.size() != p.design.cols()) throw InvalidParameter("huber: beta length must equal d");
  const Vector fitted = p.design * beta;
  return {smooth_at(p, fitted), grad_at(p, fitted)};
}

double objective(const HuberProblem& p, const Vector& beta) {
  return loss_and_grad(p, beta).first + p.lambda * beta.lpNorm<1>();
}

double kkt_residual(const HuberProblem& p, const Vector& beta) {
  return kkt_from_grad(loss_and_grad(p, beta).second, beta, p.lambda);
}

double lambda_default(double m2t, double sigma_max_hat, double epsilon, int k, int t, double c_lambda) {
  if (!(m2t > 0) || !(sigma_max_hat > 0) || !(epsilon > 0) || k < 1 || t < 1 || !(c_lambda > 0)) {
    throw InvalidParameter("lambda_default: arguments must be positive");
  }
  return c_lambda * m2t * std::sqrt(sigma_max_hat) * std::pow(epsilon, 1.0 - 1.0 / (2.0 * t)) /
         std::sqrt(static_cast<double>(k));
}

std::pair<Vector, SolveReport> minimize(const HuberProblem& p, double tol_kkt, int max_iters, const Vector* start) {
  validate_problem(p);
  const Index d = p.design.cols();
  SolveReport rep;
  Vector x = start ? *start : Vector::Zero(d);
  if (x.size() != d) throw InvalidParameter("minimize: start has the wrong length");

  double L = lipschitz_estimate(p);
  if (!(L > 0)) {
    // The smooth part is constant, so the penalty alone decides.
    Vector zero = p.lambda > 0 ? Vector::Zero(d) : x;
    rep.final_objective = objective(p, zero);
    rep.kkt_residual = kkt_residual(p, zero);
    rep.converged = rep.kkt_residual <= tol_kkt;
    return {zero, rep};
  }

  // FISTA with gradient-based adaptive restart. The iterates are not forced to be monotone:
  // rejecting extrapolated steps destroys momentum on stiff problems and stalls far from the
  // KKT tolerance. The best point seen so far is kept for the non-converged case.
  Vector Xx = p.design * x;
  Vector y = x, Xy = Xx;
  Vector best = x, Xbest = Xx;
  double tk = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < max_iters; ++it) {
    const Vector gy = grad_at(p, Xy);

    Vector z, Xz;
    for (int bt = 0; bt < 60; ++bt) {
      z = soft_threshold(y - gy / L, p.lambda / L);
      Xz = p.design * z;
      const double dz2 = (z - y).squaredNorm();
      if (dz2 == 0.0) break;
      // Bregman gap summed row by row; forming fz - fy - <g, dz> directly cancels badly near the optimum
      if (bregman_at(p, Xy, Xz) <= 0.5 * L * dz2 * (1.0 + 1e-10)) break;
      L *= 2.0;
    }
    const Vector x_old = x, Xx_old = Xx;
    x = z;
    Xx = Xz;
    if (smooth_change(p, Xbest, Xx) + p.lambda * (x.cwiseAbs() - best.cwiseAbs()).sum() < 0.0) {
      best = x;
      Xbest = Xx;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    const bool restart = (y - z).dot(z - x_old) > 0.0;
    if (restart) {
      tk = 1.0;
      y = x;
      Xy = Xx;
    } else {
      const double b = (tk - 1.0) / t_next;
      y = x + b * (x - x_old);
      Xy = Xx + b * (Xx - Xx_old);
      tk = t_next;
    }
    if (it % 100 == 99) {
      // refresh the cached products against drift
      Xx = p.design * x;
      Xy = p.design * y;
    }
    if (it % 10 == 9 || restart) {
      if (kkt_from_grad(grad_at(p, Xx), x, p.lambda) <= tol_kkt) {
        ++it;
        converged = true;
        break;
      }
    }
  }
  if (!converged) x = best;

  rep.iterations = it;
  rep.step_size_used = 1.0 / L;
  rep.final_objective = objective(p, x);
  rep.kkt_residual = kkt_residual(p, x);
  rep.converged = rep.kkt_residual <= tol_kkt;
  return {x, rep};
}

}  // namespace rsreg
