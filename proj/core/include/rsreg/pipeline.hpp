#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "rsreg/filter.hpp"
#include "rsreg/huber.hpp"
#include "rsreg/model.hpp"
#include "rsreg/preprocess.hpp"

namespace rsreg {

/// Quantities that tie a run to the error-bound conditions. Optional fields need ground truth.
struct Diagnostics {
  double lambda_used = 0.0;
  std::optional<double> tau_used;  // empty when truncation was skipped
  double sigma_max_hat = 0.0;
  double sigma_min_assumed = 0.0;
  double elastic_k = 1.0;
  double a2t = 0.0;
  double b2t_certified = 0.0;  // relaxation bound at the final weights
  std::optional<double> gamma1_empirical;
  std::optional<bool> lambda_dominates_gamma1;  // lambda >= 2 gamma1
  double gamma2_implied = 0.0;                  // 6 b eps_tilde^(1 - 1/(2t)), b = b2t^(1/(2t))
  double r_predicted = 0.0;                     // 100 (lambda sqrt(k / sigma_min) + gamma2) / rho, rho = 1/4
  double epsilon_tilde = 0.0;
  bool sample_size_condition = false;
};

struct EstimateResult {
  Vector beta_hat;
  WeightVector weights;
  TruncationReport truncation;
  FilterReport filter;
  SolveReport solve;
  Diagnostics diagnostics;
  std::vector<std::string> warnings;
};

struct EstimateHooks {
  std::ostream* trace = nullptr;                   // filter JSON-lines
  std::optional<std::filesystem::path> dump_path;  // final relaxation sidecar
};

/// rescale -> truncate -> filter -> weighted Huber -> unscale.
EstimateResult estimate(const RegressionInstance& inst, const EstimatorConfig& cfg, const EstimateHooks& hooks = {});

/// State handed to compute_diagnostics by estimate.
struct PipelineState {
  const Matrix& design;  // truncated design in rescaled units
  const RegressionInstance& scaled;
  const EstimatorConfig& cfg;
  double lambda = 0.0;
  std::optional<double> tau;
  double sigma_max_hat = 0.0;
  double sigma_min = 0.0;
  double K = 1.0;
  double a2t = 0.0;
  double b2t = 0.0;
  double epsilon_tilde = 0.0;
};

Diagnostics compute_diagnostics(const PipelineState& state);

/// JSON document with beta_hat, weights, stage reports and diagnostics.
std::string result_to_json(const EstimateResult& res);

}  // namespace rsreg
