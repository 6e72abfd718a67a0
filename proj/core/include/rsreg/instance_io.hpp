#pragma once

#include <filesystem>
#include <string>

#include "rsreg/model.hpp"

namespace rsreg {

/**
 * Instance directory layout:
 *   design.csv    n lines of d comma-separated reals
 *   response.csv  n reals, one per line
 *   meta.json     sigma, epsilon, alpha, n, d and an optional "truth" block
 *
 * Reals are written with 17 significant digits so a write/read cycle is exact.
 */
void write_instance(const RegressionInstance& inst, const std::filesystem::path& dir);
RegressionInstance read_instance(const std::filesystem::path& dir);

Matrix read_csv_matrix(const std::filesystem::path& file);
void write_csv_matrix(const Matrix& m, const std::filesystem::path& file);

/**
 * Estimator config from a JSON object. Keys mirror the EstimatorConfig field
 * names; "backend" may be a string or an object with "kind", "tol_feas",
 * "tol_gap", "max_solver_iters", "seed", "full_sos_max_d". Unknown keys are
 * rejected. Defaults come from EstimatorConfig::defaults_for(t).
 */
EstimatorConfig config_from_json(const std::string& text);
EstimatorConfig read_config(const std::filesystem::path& file);
std::string config_to_json(const EstimatorConfig& cfg);

}  // namespace rsreg
