#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsreg/types.hpp"

namespace rsreg {

/// Quantities known only to the data generator.
struct GroundTruth {
  Vector beta_star;
  Matrix covariance;
  std::vector<bool> good_mask;  // true for rows that were not replaced by the adaptive adversary
  Vector eta;                   // oblivious noise, in the instance's original scale
  std::vector<Index> zeta_support;
  int k = 1;
  std::uint64_t seed = 0;
};

/**
 * A linear-regression sample y = X beta* + eta + zeta with an
 * epsilon-fraction of rows replaced after the fact.
 *
 * `sigma` bounds at least an alpha-fraction of the oblivious noise entries.
 */
struct RegressionInstance {
  Matrix design;
  Vector response;
  double sigma = 1.0;
  double epsilon = 0.0;
  double alpha = 1.0;
  std::optional<GroundTruth> truth;

  Index n() const { return design.rows(); }
  Index d() const { return design.cols(); }
};

struct EstimatorConfig {
  int k = 1;
  double epsilon = 0.05;
  std::optional<double> sigma;  // overrides the instance's noise scale
  int t = 1;
  int ell = 2;
  double m2t = 3.0;
  double c_lambda = 1000.0;
  double c_tau = 0.01;
  double c_threshold = 10.0;  // 10^t for t = 1
  bool skip_truncation = false;
  bool apply_filter = true;
  RelaxationBackend backend;
  double delta = 0.01;

  double kappa_hat = 1.0;
  double epsilon_tilde_factor = 2.0;
  double huber_threshold = 2.0;
  double tol_kkt = 1e-8;
  int max_huber_iters = 50000;
  int mom_blocks = 0;  // 0 selects the default block count
  bool mom_median_over_coordinates = true;  // false takes the max over coordinates
  double eps_alpha_ratio = 4.0;             // C in epsilon <= alpha / C

  std::optional<double> elastic_k;  // overrides K = 100 k / sigma_min
  std::optional<double> sigma_min;  // overrides sigma_max_hat / kappa_hat
  std::optional<double> tau;        // overrides the automatic truncation level
  std::optional<double> lambda;     // overrides the penalty rule
  std::optional<double> sigma_max_hat;  // overrides the median-of-means scale estimate

  /// Config with the documented defaults for moment order t (threshold 10^t, ell = 2t).
  static EstimatorConfig defaults_for(int t);
};

/// Throws InvalidParameter when a config invariant fails.
void validate_config(const EstimatorConfig& cfg);

struct Violation {
  std::string field;
  std::string rule;
};

/// Checks every RegressionInstance/GroundTruth invariant. `eps_alpha_ratio` is
/// the constant C in epsilon <= alpha / C.
std::vector<Violation> validate_instance(const RegressionInstance& inst, double eps_alpha_ratio = 4.0);

struct ScaleRecord {
  double sigma = 1.0;
};

/// Divides the response by sigma; the design is left as is.
std::pair<RegressionInstance, ScaleRecord> rescale_by_sigma(const RegressionInstance& inst);

inline Vector unscale_beta(const Vector& beta, const ScaleRecord& rec) { return beta * rec.sigma; }

}  // namespace rsreg
