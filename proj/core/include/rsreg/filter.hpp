#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "rsreg/relaxation.hpp"

namespace rsreg {

struct FilterConfig {
  double epsilon_tilde = 0.1;
  int t = 1;
  int ell = 2;
  double a2t_threshold = 1.0;  // clean-data moment level a^{2t}
  double c_threshold = 10.0;
  int max_iters_cap = 0;       // 0 selects ceil(2 epsilon_tilde n) + 5
  RelaxationBackend backend;
  double K = 1.0;
};

/// Per-iteration record. Mass fields need the good-row mask.
struct FilterIteration {
  int iteration = 0;
  double objective = 0.0;       // certified bound before the update
  double weighted_score = 0.0;  // sum_i w_i tau_i
  double tau_max = 0.0;
  Index newly_zeroed = 0;
  double weight_sum_after = 0.0;

  std::optional<double> clean_score;  // sum over good rows of w_i tau_i
  std::optional<double> good_loss_before, bad_loss_before;
  std::optional<double> good_loss_after, bad_loss_after;
  std::optional<bool> precondition;   // clean_score <= a^{2t} and objective >= c a^{2t}
  std::optional<bool> invariant_holds;
};

struct FilterReport {
  int iterations = 0;
  std::vector<double> objective_trace;  // iterations + 1 entries
  std::vector<Index> zeroed_rows;
  double final_weight_sum = 1.0;
  bool cap_hit = false;
  int max_iters_cap = 0;
  std::vector<FilterIteration> invariant_log;
  PseudoExpectation final_solution;  // relaxation at the returned weights
};

struct FilterHooks {
  const std::vector<bool>* good_mask = nullptr;  // enables the mass bookkeeping
  std::ostream* trace = nullptr;                 // one JSON object per line
};

/**
 * Soft down-weighting filter. Starting from uniform weights, repeatedly solves
 * the moment relaxation and multiplies each weight by (1 - tau_i / tau_max)
 * until the certified objective drops below c_threshold * a2t_threshold.
 *
 * tau_max is taken over rows that still carry weight, so each completed
 * iteration zeroes at least one more row.
 */
std::pair<WeightVector, FilterReport> run_filter(const Matrix& rows, const FilterConfig& cfg,
                                                 const FilterHooks& hooks = {});

/// 0 <= w_i <= 1/n and sum_i w_i >= 1 - epsilon_tilde.
bool weight_polytope_check(const Vector& w, double epsilon_tilde);

}  // namespace rsreg
