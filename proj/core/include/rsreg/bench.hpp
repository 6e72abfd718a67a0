#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsreg/datagen.hpp"
#include "rsreg/model.hpp"

namespace rsreg {

struct Metrics {
  double sigma_error = 0.0;  // |Sigma^{1/2} (beta_hat - beta*)|
  double l2_error = 0.0;
  double l1_error = 0.0;
  double support_precision = 0.0;
  double support_recall = 0.0;
};

/// Throws InvalidParameter when the instance carries no ground truth.
Metrics compute_metrics(const Vector& beta_hat, const RegressionInstance& inst);
Metrics compute_metrics(const Vector& beta_hat, const GroundTruth& truth);

/**
 * full:        truncation, filter, weighted Huber
 * no_filter:   truncation, uniform-weight Huber
 * no_truncate: filter and Huber on the raw design
 * plain_lasso: squared loss (infinite Huber threshold), neither filter nor truncation
 */
enum class Variant { full, no_filter, no_truncate, plain_lasso };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
EstimatorConfig apply_variant(EstimatorConfig cfg, Variant v);

/// Instance description from JSON, the input format of `rsreg gen`.
datagen::InstanceSpec instance_spec_from_json(const std::string& text);

struct SweepSpec {
  std::vector<Index> n;               // ignored when n_rule_c is set
  std::optional<double> n_rule_c;     // n = ceil(c k^2 log(d) / epsilon)
  std::vector<Index> d;
  std::vector<int> k;
  std::vector<double> epsilon;
  std::vector<std::string> design;    // gaussian, student_t, laplace, uniform
  std::vector<std::string> noise;     // gaussian, cauchy, sparse_inlier
  std::vector<std::string> adversary; // none, random_junk, leverage, label_flip
  std::vector<int> t;
  std::vector<std::string> backend;   // empty: the default backend for each t
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::vector<Variant> variants{Variant::full};

  double beta_norm = 1.0;
  double student_dof = 5.0;
  datagen::CovarianceSpec covariance = datagen::IdentityCov{};
  double noise_sigma = 1.0;
  double cauchy_scale = 1.0;
  double inlier_alpha = 0.25;
  double spike_magnitude = 100.0;
  double junk_magnitude = 10.0;
  double leverage_scale = 1.0;
  double leverage_shift = 10.0;

  std::string estimator_json = "{}";  // base EstimatorConfig; k, epsilon and t come from the cell
  bool record_wall_time = false;      // timings make the CSV run-dependent
};

/// Throws InvalidParameter on unknown keys, empty grids or trials < 1.
SweepSpec parse_sweep_spec(const std::string& text);
void validate_sweep(const SweepSpec& spec);

inline constexpr int kCsvSchemaVersion = 1;

struct SweepResult {
  std::string csv;
  int rows = 0;
  int failures = 0;
};

/// One row per (cell, trial, variant), ordered by that key whatever the thread count.
SweepResult run_sweep(const SweepSpec& spec, int threads = 1);

/// Median and interquartile range of the error columns per group and variant.
/// `group_by` is a comma-separated list of CSV column names.
std::string report(const std::string& csv, const std::string& group_by);

/// Whitespace-separated columns "group median q1 q3" of `metric` for gnuplot.
std::string gnuplot_columns(const std::string& csv, const std::string& group_by, const std::string& metric,
                            const std::string& variant);

/// Parsed CSV helpers shared with report.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // throws when absent
};
CsvTable parse_csv(const std::string& text);

}  // namespace rsreg
