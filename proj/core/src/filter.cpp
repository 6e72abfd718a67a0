#include "rsreg/filter.hpp"

#include <cmath>

#include "json.hpp"

namespace rsreg {

namespace {

void write_trace(std::ostream& os, const FilterIteration& it, bool final_row) {
  nlohmann::json j;
  j["iteration"] = it.iteration;
  j["objective"] = it.objective;
  j["final"] = final_row;
  if (!final_row) {
    j["weighted_score"] = it.weighted_score;
    j["tau_max"] = it.tau_max;
    j["newly_zeroed"] = it.newly_zeroed;
    j["weight_sum"] = it.weight_sum_after;
  }
  if (it.clean_score) j["clean_score"] = *it.clean_score;
  if (it.precondition) j["precondition"] = *it.precondition;
  if (it.good_loss_after) j["good_loss"] = *it.good_loss_after;
  if (it.bad_loss_after) j["bad_loss"] = *it.bad_loss_after;
  if (it.invariant_holds) j["invariant_holds"] = *it.invariant_holds;
  os << j.dump() << '\n';
}

std::pair<double, double> mass_lost(const Vector& w, const std::vector<bool>& good) {
  const double base = 1.0 / static_cast<double>(w.size());
  double g = 0.0, b = 0.0;
  for (Index i = 0; i < w.size(); ++i) (good[i] ? g : b) += base - w[i];
  return {g, b};
}

}  // namespace

std::pair<WeightVector, FilterReport> run_filter(const Matrix& rows, const FilterConfig& cfg,
                                                 const FilterHooks& hooks) {
  const Index n = rows.rows();
  if (n == 0) throw InvalidParameter("run_filter: no rows");
  if (!(cfg.a2t_threshold > 0)) throw InvalidParameter("run_filter: a2t_threshold must be positive");
  if (!(cfg.c_threshold > 0)) throw InvalidParameter("run_filter: c_threshold must be positive");
  if (!(cfg.epsilon_tilde >= 0)) throw InvalidParameter("run_filter: epsilon_tilde must be non-negative");
  if (hooks.good_mask && static_cast<Index>(hooks.good_mask->size()) != n) {
    throw InvalidParameter("run_filter: good_mask length must equal the row count");
  }

  const ElasticSystem sys = build_elastic(rows.cols(), cfg.K, cfg.ell);
  const double threshold = cfg.c_threshold * cfg.a2t_threshold;
  const int cap = cfg.max_iters_cap > 0
                      ? cfg.max_iters_cap
                      : static_cast<int>(std::ceil(2.0 * cfg.epsilon_tilde * static_cast<double>(n))) + 5;

  FilterReport rep;
  rep.max_iters_cap = cap;
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  PseudoExpectation prev;
  bool have_prev = false;

  for (;;) {
    SolveOptions opts;
    opts.decision_threshold = threshold;
    if (have_prev) opts.warm_start = &prev;
    PseudoExpectation pe = solve_max_moment(rows, WeightVector(w), cfg.t, sys, cfg.backend, opts);
    rep.objective_trace.push_back(pe.objective);

    if (pe.objective < threshold) {
      rep.final_solution = std::move(pe);
      break;
    }
    if (rep.iterations >= cap) {
      rep.cap_hit = true;
      rep.final_solution = std::move(pe);
      break;
    }

    Vector tau = score_rows(rows, pe).cwiseMax(0.0);
    double tau_max = 0.0;
    for (Index i = 0; i < n; ++i)
      if (w[i] > 0) tau_max = std::max(tau_max, tau[i]);
    if (!(tau_max > 0)) {
      throw InternalError("run_filter: every score is zero while the objective exceeds the threshold");
    }

    FilterIteration rec;
    rec.iteration = rep.iterations;
    rec.objective = pe.objective;
    rec.weighted_score = w.dot(tau);
    rec.tau_max = tau_max;
    if (hooks.good_mask) {
      double clean = 0.0;
      for (Index i = 0; i < n; ++i)
        if ((*hooks.good_mask)[i]) clean += w[i] * tau[i];
      rec.clean_score = clean;
      rec.precondition = clean <= cfg.a2t_threshold && pe.objective >= threshold;
      auto [g, b] = mass_lost(w, *hooks.good_mask);
      rec.good_loss_before = g;
      rec.bad_loss_before = b;
    }

    const double cut = tau_max * (1.0 - 1e-12);
    for (Index i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      if (tau[i] >= cut) {
        w[i] = 0.0;
        rep.zeroed_rows.push_back(i);
        ++rec.newly_zeroed;
      } else {
        w[i] *= 1.0 - tau[i] / tau_max;
      }
    }
    rec.weight_sum_after = w.sum();
    if (hooks.good_mask) {
      auto [g, b] = mass_lost(w, *hooks.good_mask);
      rec.good_loss_after = g;
      rec.bad_loss_after = b;
      rec.invariant_holds = g < b;
    }
    if (hooks.trace) write_trace(*hooks.trace, rec, false);
    rep.invariant_log.push_back(rec);
    ++rep.iterations;
    prev = std::move(pe);
    have_prev = true;
  }

  rep.final_weight_sum = w.sum();
  if (hooks.trace) {
    FilterIteration last;
    last.iteration = rep.iterations;
    last.objective = rep.objective_trace.back();
    write_trace(*hooks.trace, last, true);
  }
  return {WeightVector(std::move(w)), std::move(rep)};
}

bool weight_polytope_check(const Vector& w, double epsilon_tilde) {
  if (w.size() == 0) return false;
  const double cap = 1.0 / static_cast<double>(w.size());
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] < 0.0 || w[i] > cap * (1.0 + 1e-12)) return false;
  return w.sum() >= 1.0 - epsilon_tilde - 1e-12;
}

}  // namespace rsreg
