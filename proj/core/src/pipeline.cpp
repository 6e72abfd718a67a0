#include "rsreg/pipeline.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "rsreg/linalg.hpp"

namespace rsreg {

namespace {

double scale_estimate(const Matrix& x, const EstimatorConfig& cfg) {
  if (cfg.sigma_max_hat) return *cfg.sigma_max_hat;
  const Index n = x.rows();
  int blocks = cfg.mom_blocks > 0 ? cfg.mom_blocks : default_mom_blocks(n, cfg.epsilon);
  if (n < 3 * static_cast<Index>(blocks)) {
    if (cfg.mom_blocks > 0) throw InvalidParameter("estimate: too few rows for the requested mom_blocks");
    blocks = 1;
  }
  const auto agg = cfg.mom_median_over_coordinates ? CoordinateAggregate::median : CoordinateAggregate::max;
  if (n < 3) {
    // too small for blocks: plain second moments
    Vector m = x.colwise().squaredNorm().transpose() / static_cast<double>(std::max<Index>(n, 1));
    std::sort(m.data(), m.data() + m.size());
    const double v = agg == CoordinateAggregate::max ? m[m.size() - 1] : m[m.size() / 2];
    return 2.0 * cfg.kappa_hat * v;
  }
  return mom_covnorm_estimate(x, blocks, cfg.kappa_hat, agg);
}

}  // namespace

Diagnostics compute_diagnostics(const PipelineState& s) {
  Diagnostics dg;
  const EstimatorConfig& cfg = s.cfg;
  dg.lambda_used = s.lambda;
  dg.tau_used = s.tau;
  dg.sigma_max_hat = s.sigma_max_hat;
  dg.sigma_min_assumed = s.sigma_min;
  dg.elastic_k = s.K;
  dg.a2t = s.a2t;
  dg.b2t_certified = s.b2t;
  dg.epsilon_tilde = s.epsilon_tilde;

  const double tt = static_cast<double>(cfg.t);
  const double b = std::pow(std::max(0.0, s.b2t), 1.0 / (2.0 * tt));
  dg.gamma2_implied = 6.0 * b * std::pow(s.epsilon_tilde, 1.0 - 1.0 / (2.0 * tt));
  const double rho = 0.25;
  dg.r_predicted = 100.0 * (s.lambda * std::sqrt(static_cast<double>(cfg.k) / s.sigma_min) / rho + dg.gamma2_implied / rho);

  const Index n = s.design.rows();
  if (s.scaled.truth && s.scaled.truth->eta.size() == n && static_cast<Index>(s.scaled.truth->good_mask.size()) == n) {
    const GroundTruth& g = *s.scaled.truth;
    Vector acc = Vector::Zero(s.design.cols());
    for (Index i = 0; i < n; ++i)
      if (g.good_mask[i]) acc += huber_deriv(g.eta[i], cfg.huber_threshold) * s.design.row(i).transpose();
    dg.gamma1_empirical = acc.lpNorm<Eigen::Infinity>() / static_cast<double>(n);
    dg.lambda_dominates_gamma1 = s.lambda >= 2.0 * *dg.gamma1_empirical;
  }
  if (cfg.epsilon > 0 && s.design.cols() > 0) {
    dg.sample_size_condition = sample_size_condition(n, s.design.cols(), cfg.k, cfg.t, 4.0, cfg.m2t, cfg.m2t, 1.0,
                                                     cfg.kappa_hat, cfg.epsilon, cfg.delta);
  }
  return dg;
}

EstimateResult estimate(const RegressionInstance& inst, const EstimatorConfig& cfg, const EstimateHooks& hooks) {
  validate_config(cfg);
  if (inst.n() == 0 || inst.d() == 0) throw InvalidParameter("estimate: empty design");
  if (inst.response.size() != inst.n()) throw InvalidParameter("estimate: response length must equal n");
  if (!inst.design.allFinite() || !inst.response.allFinite()) throw InvalidParameter("estimate: non-finite input");

  RegressionInstance src = inst;
  if (cfg.sigma) src.sigma = *cfg.sigma;
  auto [scaled, rec] = rescale_by_sigma(src);
  const Index n = scaled.n();
  const Index d = scaled.d();

  EstimateResult res;
  const double sigma_max_hat = scale_estimate(scaled.design, cfg);
  if (!(sigma_max_hat > 0)) throw InvalidParameter("estimate: design has no spread (scale estimate is zero)");

  Matrix design;
  std::optional<double> tau;
  if (cfg.skip_truncation) {
    design = scaled.design;
    res.truncation.tau = 0.0;
  } else {
    tau = cfg.tau ? *cfg.tau
                  : auto_tau(n, d, cfg.k, cfg.t, sigma_max_hat, cfg.kappa_hat, cfg.delta, cfg.c_tau);
    auto [tr, report] = truncate_entries(scaled.design, *tau);
    design = std::move(tr);
    res.truncation = std::move(report);
  }

  const double sigma_min = cfg.sigma_min ? *cfg.sigma_min : sigma_max_hat / cfg.kappa_hat;
  const double K = cfg.elastic_k ? *cfg.elastic_k : std::max(1.0, 100.0 * cfg.k / sigma_min);
  const double tt = static_cast<double>(cfg.t);
  const double a2t = std::pow(2.0 * cfg.m2t, 2.0 * tt) * std::pow(sigma_max_hat, tt);
  const double eps_tilde = cfg.epsilon_tilde_factor * cfg.epsilon;

  if (cfg.apply_filter) {
    FilterConfig fc;
    fc.epsilon_tilde = eps_tilde;
    fc.t = cfg.t;
    fc.ell = cfg.ell;
    fc.a2t_threshold = a2t;
    fc.c_threshold = cfg.c_threshold;
    fc.backend = cfg.backend;
    fc.K = K;
    FilterHooks fh;
    fh.trace = hooks.trace;
    if (scaled.truth && static_cast<Index>(scaled.truth->good_mask.size()) == n) fh.good_mask = &scaled.truth->good_mask;
    auto [w, frep] = run_filter(design, fc, fh);
    res.weights = std::move(w);
    res.filter = std::move(frep);
    if (res.filter.cap_hit) res.warnings.push_back("filter stopped at its iteration cap");
  } else {
    res.weights = WeightVector::uniform(n);
    const ElasticSystem sys = build_elastic(d, K, cfg.ell);
    res.filter.final_solution = solve_max_moment(design, res.weights, cfg.t, sys, cfg.backend);
    res.filter.objective_trace.push_back(res.filter.final_solution.objective);
    res.filter.final_weight_sum = res.weights.sum();
  }
  for (const auto& w : res.filter.final_solution.warnings) res.warnings.push_back(w);
  if (hooks.dump_path) dump_relaxation(res.filter.final_solution, *hooks.dump_path);

  double lambda = 0.0;
  if (cfg.lambda) {
    lambda = *cfg.lambda;
  } else if (cfg.epsilon > 0) {
    lambda = lambda_default(cfg.m2t, sigma_max_hat, cfg.epsilon, cfg.k, cfg.t, cfg.c_lambda);
  }

  HuberProblem prob{design, scaled.response, res.weights, lambda, cfg.huber_threshold};
  auto [beta, srep] = minimize(prob, cfg.tol_kkt, cfg.max_huber_iters);
  res.solve = srep;
  if (!srep.converged) res.warnings.push_back("huber minimizer did not reach the KKT tolerance");
  res.beta_hat = unscale_beta(beta, rec);

  PipelineState st{design, scaled, cfg, 0.0, std::nullopt};
  st.lambda = lambda;
  st.tau = tau;
  st.sigma_max_hat = sigma_max_hat;
  st.sigma_min = sigma_min;
  st.K = K;
  st.a2t = a2t;
  st.b2t = res.filter.final_solution.objective;
  st.epsilon_tilde = eps_tilde;
  res.diagnostics = compute_diagnostics(st);
  return res;
}

std::string result_to_json(const EstimateResult& res) {
  using nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j;
  j["beta_hat"] = vec(res.beta_hat);
  j["weights"] = vec(res.weights.values());

  json tr;
  tr["tau"] = res.truncation.tau;
  tr["affected_rows"] = res.truncation.affected_rows;
  tr["affected_fraction"] = res.truncation.affected_fraction;
  j["truncation"] = tr;

  const FilterReport& f = res.filter;
  json fj;
  fj["iterations"] = f.iterations;
  fj["objective_trace"] = f.objective_trace;
  fj["zeroed_rows"] = f.zeroed_rows;
  fj["final_weight_sum"] = f.final_weight_sum;
  fj["cap_hit"] = f.cap_hit;
  fj["max_iters_cap"] = f.max_iters_cap;
  json log = json::array();
  for (const auto& it : f.invariant_log) {
    json r;
    r["iteration"] = it.iteration;
    r["objective"] = it.objective;
    r["tau_max"] = it.tau_max;
    r["newly_zeroed"] = it.newly_zeroed;
    if (it.good_loss_after) r["good_loss"] = *it.good_loss_after;
    if (it.bad_loss_after) r["bad_loss"] = *it.bad_loss_after;
    if (it.precondition) r["precondition"] = *it.precondition;
    if (it.invariant_holds) r["invariant_holds"] = *it.invariant_holds;
    log.push_back(r);
  }
  fj["invariant_log"] = log;
  j["filter"] = fj;

  json sj;
  sj["iterations"] = res.solve.iterations;
  sj["final_objective"] = res.solve.final_objective;
  sj["kkt_residual"] = res.solve.kkt_residual;
  sj["step_size_used"] = res.solve.step_size_used;
  sj["converged"] = res.solve.converged;
  j["solve"] = sj;

  const Diagnostics& dg = res.diagnostics;
  json dj;
  dj["lambda_used"] = dg.lambda_used;
  dj["tau_used"] = dg.tau_used ? json(*dg.tau_used) : json("unavailable");
  dj["sigma_max_hat"] = dg.sigma_max_hat;
  dj["sigma_min_assumed"] = dg.sigma_min_assumed;
  dj["elastic_k"] = dg.elastic_k;
  dj["a2t"] = dg.a2t;
  dj["b2t_certified"] = dg.b2t_certified;
  dj["gamma1_empirical"] = dg.gamma1_empirical ? json(*dg.gamma1_empirical) : json("unavailable");
  dj["lambda_dominates_gamma1"] =
      dg.lambda_dominates_gamma1 ? json(*dg.lambda_dominates_gamma1) : json("unavailable");
  dj["gamma2_implied"] = dg.gamma2_implied;
  dj["r_predicted"] = dg.r_predicted;
  dj["epsilon_tilde"] = dg.epsilon_tilde;
  dj["sample_size_condition"] = dg.sample_size_condition;
  j["diagnostics"] = dj;
  j["warnings"] = res.warnings;
  return j.dump(2);
}

}  // namespace rsreg
