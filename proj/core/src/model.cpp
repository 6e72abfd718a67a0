#include "rsreg/model.hpp"

#include <cmath>

namespace rsreg {

EstimatorConfig EstimatorConfig::defaults_for(int t) {
  EstimatorConfig cfg;
  cfg.t = t;
  cfg.ell = 2 * t;
  cfg.c_threshold = std::pow(10.0, t);
  cfg.backend.kind = t == 1 ? BackendKind::basic_sdp_t1 : BackendKind::lite_quartic_t2;
  return cfg;
}

void validate_config(const EstimatorConfig& cfg) {
  if (cfg.k < 1) throw InvalidParameter("config: k must be positive");
  if (cfg.t < 1) throw InvalidParameter("config: t must be positive");
  if (cfg.ell < 2 * cfg.t || cfg.ell % 2 != 0) throw InvalidParameter("config: ell must be even and >= 2t");
  if (cfg.sigma && !(*cfg.sigma > 0)) throw InvalidParameter("config: sigma must be positive");
  if (!(cfg.eps_alpha_ratio >= 1.0)) throw InvalidParameter("config: eps_alpha_ratio must be >= 1");
  if (cfg.sigma_max_hat && !(*cfg.sigma_max_hat > 0)) throw InvalidParameter("config: sigma_max_hat must be positive");
  if (cfg.sigma_min && !(*cfg.sigma_min > 0)) throw InvalidParameter("config: sigma_min must be positive");
  if (cfg.mom_blocks < 0 || (cfg.mom_blocks > 0 && cfg.mom_blocks % 2 == 0)) {
    throw InvalidParameter("config: mom_blocks must be odd (or 0 for the default)");
  }
  if (!(cfg.m2t >= 1.0)) throw InvalidParameter("config: m2t must be >= 1");
  if (!(cfg.c_lambda > 0) || !(cfg.c_tau > 0) || !(cfg.c_threshold > 0)) {
    throw InvalidParameter("config: analysis constants must be positive");
  }
  if (!(cfg.delta > 0 && cfg.delta < 1)) throw InvalidParameter("config: delta must lie in (0, 1)");
  if (!(cfg.epsilon >= 0 && cfg.epsilon < 0.5)) throw InvalidParameter("config: epsilon must lie in [0, 1/2)");
  if (!(cfg.kappa_hat >= 1.0)) throw InvalidParameter("config: kappa_hat must be >= 1");
  if (!(cfg.huber_threshold > 0)) throw InvalidParameter("config: huber threshold must be positive");
  if (cfg.elastic_k && !(*cfg.elastic_k >= 1.0)) throw InvalidParameter("config: elastic K must be >= 1");
  if (cfg.tau && !(*cfg.tau > 0)) throw InvalidParameter("config: tau must be positive");
  if (cfg.lambda && !(*cfg.lambda >= 0)) throw InvalidParameter("config: lambda must be non-negative");
  if (!(cfg.backend.tol_feas > 0) || !(cfg.backend.tol_gap > 0)) {
    throw InvalidParameter("config: backend tolerances must be positive");
  }
}

std::vector<Violation> validate_instance(const RegressionInstance& inst, double eps_alpha_ratio) {
  std::vector<Violation> out;
  const Index n = inst.design.rows();
  const Index d = inst.design.cols();

  if (n == 0 || d == 0) out.push_back({"design", "design must be non-empty"});
  if (!inst.design.allFinite()) out.push_back({"design", "all design entries must be finite"});
  if (inst.response.size() != n) {
    out.push_back({"response", "response length must equal the number of design rows"});
  } else if (!inst.response.allFinite()) {
    out.push_back({"response", "all response entries must be finite"});
  }
  if (!(inst.sigma > 0) || !std::isfinite(inst.sigma)) out.push_back({"sigma", "sigma must be positive"});
  if (!(inst.alpha > 0 && inst.alpha <= 1)) out.push_back({"alpha", "alpha out of range (0, 1]"});
  if (!(inst.epsilon > 0 && inst.epsilon < 0.5)) {
    out.push_back({"epsilon", "epsilon out of range (0, 1/2)"});
  } else if (inst.alpha > 0 && inst.epsilon > inst.alpha / eps_alpha_ratio) {
    out.push_back({"epsilon", "epsilon exceeds alpha / C"});
  }

  if (inst.truth) {
    const GroundTruth& g = *inst.truth;
    if (g.beta_star.size() != d) {
      out.push_back({"truth.beta_star", "beta_star length must equal d"});
    } else {
      Index nnz = 0;
      for (Index j = 0; j < d; ++j) nnz += g.beta_star[j] != 0.0 ? 1 : 0;
      if (nnz > g.k) out.push_back({"truth.beta_star", "beta_star has more than k nonzeros"});
    }
    if (g.covariance.rows() != d || g.covariance.cols() != d) {
      out.push_back({"truth.covariance", "covariance must be d x d"});
    } else {
      if (!g.covariance.isApprox(g.covariance.transpose(), 1e-12)) {
        out.push_back({"truth.covariance", "covariance must be symmetric"});
      }
      Eigen::LLT<Matrix> llt(g.covariance);
      if (llt.info() != Eigen::Success) out.push_back({"truth.covariance", "covariance must be positive definite"});
    }
    if (static_cast<Index>(g.good_mask.size()) != n) {
      out.push_back({"truth.good_mask", "good_mask length must equal n"});
    } else {
      Index bad = 0;
      for (bool ok : g.good_mask) bad += ok ? 0 : 1;
      const auto budget = static_cast<Index>(std::ceil(inst.epsilon * static_cast<double>(n) - 1e-9));
      if (bad > budget) out.push_back({"truth.good_mask", "more than ceil(epsilon n) corrupted rows"});
    }
    if (g.eta.size() != n) {
      out.push_back({"truth.eta", "eta length must equal n"});
    } else if (inst.sigma > 0) {
      Index small = 0;
      for (Index i = 0; i < n; ++i) small += std::abs(g.eta[i]) <= inst.sigma ? 1 : 0;
      const auto need = static_cast<Index>(std::ceil(inst.alpha * static_cast<double>(n) - 1e-9));
      if (small < need) out.push_back({"truth.eta", "fewer than ceil(alpha n) noise entries bounded by sigma"});
    }
    for (Index i : g.zeta_support) {
      if (i < 0 || i >= n) {
        out.push_back({"truth.zeta_support", "index out of range"});
        break;
      }
    }
  }
  return out;
}

std::pair<RegressionInstance, ScaleRecord> rescale_by_sigma(const RegressionInstance& inst) {
  if (!(inst.sigma > 0)) throw InvalidParameter("rescale_by_sigma: sigma must be positive");
  RegressionInstance out = inst;
  ScaleRecord rec{inst.sigma};
  if (inst.sigma != 1.0) {
    out.response = inst.response / inst.sigma;
    if (out.truth) out.truth->eta = inst.truth->eta / inst.sigma;
    if (out.truth) out.truth->beta_star = inst.truth->beta_star / inst.sigma;
  }
  out.sigma = 1.0;
  return {std::move(out), rec};
}

}  // namespace rsreg
