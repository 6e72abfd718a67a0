#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "rsreg/model.hpp"

namespace rsreg::datagen {

// Design families. Each is standardized to mean 0 and unit variance per
// coordinate before the covariance factor is applied.
struct Gaussian {};
struct StudentT {
  double dof = 5.0;
};
struct LaplaceProduct {};
struct UniformBox {};
using DesignFamily = std::variant<Gaussian, StudentT, LaplaceProduct, UniformBox>;

struct IdentityCov {};
struct DiagonalCov {
  Vector values;
};
struct ToeplitzCov {
  double rho = 0.5;
};
struct ExplicitCov {
  Matrix matrix;
};
using CovarianceSpec = std::variant<IdentityCov, DiagonalCov, ToeplitzCov, ExplicitCov>;

struct DesignSpec {
  DesignFamily family = Gaussian{};
  CovarianceSpec covariance = IdentityCov{};
  Index d = 1;
};

/// Materializes the covariance; throws InvalidParameter unless it is symmetric positive definite.
Matrix covariance_matrix(const DesignSpec& spec);

/// max_j E|x_j|^4 / ||Sigma||^2 bound (nu^4 in the entrywise fourth-moment condition).
double entrywise_nu4(const DesignFamily& family);

/// Rows iid with mean 0 and covariance Sigma = L L^T, built as x = L z.
Matrix sample_design(const DesignSpec& spec, Index n, std::uint64_t seed);

struct GaussianNoise {
  double sigma = 1.0;
};
struct CauchyNoise {
  double scale = 1.0;
};
/// ceil(alpha n) inliers uniform on [-sigma, sigma]; the rest are +-spike_magnitude.
struct SparseInlierNoise {
  double alpha = 0.05;
  double sigma = 1.0;
  double spike_magnitude = 100.0;
};
using NoiseSpec = std::variant<GaussianNoise, CauchyNoise, SparseInlierNoise>;

/// The sigma for which the noise satisfies the oblivious-noise bound.
double noise_sigma(const NoiseSpec& spec);
/// Probability that a single draw satisfies |eta_i| <= sigma.
double noise_alpha(const NoiseSpec& spec);

Vector sample_noise(const NoiseSpec& spec, Index n, std::uint64_t seed);

struct NoAttack {};
struct RandomJunk {
  double magnitude = 10.0;
};
enum class LeverageDirection { random_sparse, off_support_coordinate };
/**
 * Corrupted rows become X*_i + m u for a unit direction u with
 * m = magnitude_scale * sqrt(n / k), and their responses are made consistent
 * with beta* + y_target_shift * u (plus the row's own oblivious noise).
 */
struct LeverageAttack {
  LeverageDirection direction_mode = LeverageDirection::random_sparse;
  double y_target_shift = 10.0;
  double magnitude_scale = 1.0;
};
struct LabelFlip {};
using AdversaryStrategy = std::variant<NoAttack, RandomJunk, LeverageAttack, LabelFlip>;

struct AdversarySpec {
  AdversaryStrategy strategy = NoAttack{};
  double epsilon = 0.0;
};

struct CorruptionResult {
  Matrix design;
  Vector response;
  std::vector<bool> good_mask;
  std::vector<Index> zeta_support;
};

/// Replaces exactly floor(epsilon n) rows. The adversary sees beta*, eta and k.
CorruptionResult corrupt(const Matrix& design, const Vector& response, const GroundTruth& truth,
                         const AdversarySpec& spec, std::uint64_t seed);

/// k-sparse vector with uniformly random support and entries +-norm/sqrt(k).
Vector sparse_beta(Index d, int k, double norm, std::uint64_t seed);

/// Full clean-then-corrupt instance with ground truth attached.
struct InstanceSpec {
  Index n = 100;
  int k = 1;
  double beta_norm = 1.0;
  DesignSpec design;
  NoiseSpec noise = GaussianNoise{};
  AdversarySpec adversary;
  double nominal_epsilon = 0.01;  // recorded budget when the adversary corrupts nothing
  std::uint64_t seed = 0;
};
RegressionInstance make_instance(const InstanceSpec& spec);

enum class MixtureVariant { second_power, fourth_power };

/**
 * Hard-instance mixtures for sparse regression. y ~ N(0,1); along a k-sparse
 * unit direction v the design follows (1-eps) N(mu0 y, theta) + eps B(mu0 y)
 * and it is standard normal on the orthogonal complement.
 *
 * second_power: B(mu) = N(-(1-eps) mu / eps, 1), |beta*| = 1e-5, theta = 1 - |beta*|^2.
 * fourth_power: Sigma = Id - c' v v^T, |beta*| = 1e-5 sqrt(eps), theta = 2/3 and
 *   B(mu) is a two-point-plus-Gaussian law chosen so the along-v mixture matches the
 *   first three moments of N(0,1). This stands in for a construction that is only
 *   cited, not written out, and is in its spirit rather than a reproduction.
 */
RegressionInstance lb_mixture_instance(Index d, int k, Index n, double epsilon, MixtureVariant variant,
                                       std::uint64_t seed);

/// Parameters of the bad component for the fourth-power mixture at conditional mean mu.
struct MomentMatchedComponent {
  double left_point = 0.0;
  double right_point = 0.0;
  double right_prob = 0.5;
  double gauss_var = 0.0;

  double raw_moment(int order) const;
};
MomentMatchedComponent fourth_power_bad_component(double mu, double epsilon, double theta);

/// Solves c' + (1 - c')^2 |beta*|^2 = 1/3 with |beta*|^2 = 1e-10 eps, so the
/// clean conditional variance along v is exactly 2/3.
double fourth_power_cprime(double epsilon);

}  // namespace rsreg::datagen
