#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rsreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a caller passes arguments outside an operation's domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on states that the algorithms guarantee cannot occur.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/**
 * Per-sample weights with 0 <= w_i <= 1/n.
 *
 * The filter produces these and the weighted Huber loss consumes them. The
 * uniform vector (1/n, ..., 1/n) has total mass 1.
 */
class WeightVector {
 public:
  WeightVector() = default;
  /// Throws InvalidParameter if any entry is outside [0, 1/n] (up to 1e-12 relative slack).
  explicit WeightVector(Vector values);

  static WeightVector uniform(Index n);

  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  const Vector& values() const { return values_; }
  double sum() const { return values_.sum(); }

  /// True iff every entry lies in [0, 1/n] within `slack` (relative to 1/n).
  static bool in_box(const Vector& values, double slack = 1e-12);

 private:
  Vector values_;
};

enum class BackendKind { basic_sdp_t1, lite_quartic_t2, full_sos };

std::string to_string(BackendKind kind);
BackendKind backend_from_string(const std::string& name);

/// Solver settings for the moment-maximization relaxations.
struct RelaxationBackend {
  BackendKind kind = BackendKind::basic_sdp_t1;
  double tol_feas = 1e-6;
  double tol_gap = 1e-4;  // relative
  int max_solver_iters = 20000;
  std::uint64_t seed = 0;
  int full_sos_max_d = 10;
  int full_sos_max_basis = 130;
  int lite_max_d = 40;
};

}  // namespace rsreg
