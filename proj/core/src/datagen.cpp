#include "rsreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rng.hpp"

namespace rsreg::datagen {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

enum Stream : std::uint64_t { kDesign = 1, kNoise, kBeta, kAttackRows, kAttackDir, kAttackJunk, kMixture };

constexpr double kGaussianWithinOne = 0.68268949213708589717;

std::vector<Index> choose_rows(Index n, Index count, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // partial Fisher-Yates; deterministic given the engine
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(static_cast<size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double standardized_draw(const DesignFamily& family, std::mt19937_64& rng) {
  return std::visit(
      overloaded{
          [&](const Gaussian&) { return std::normal_distribution<double>(0.0, 1.0)(rng); },
          [&](const StudentT& s) {
            return std::student_t_distribution<double>(s.dof)(rng) * std::sqrt((s.dof - 2.0) / s.dof);
          },
          [&](const LaplaceProduct&) {
            const double e = std::exponential_distribution<double>(1.0)(rng);
            const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
            return sign * e / std::sqrt(2.0);
          },
          [&](const UniformBox&) {
            return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(rng);
          },
      },
      family);
}

Vector random_sparse_unit(Index d, int k, std::mt19937_64& rng) {
  const Index kk = std::min<Index>(k, d);
  Vector u = Vector::Zero(d);
  for (Index j : choose_rows(d, kk, rng)) {
    u[j] = (std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(kk));
  }
  return u;
}

}  // namespace

Matrix covariance_matrix(const DesignSpec& spec) {
  const Index d = spec.d;
  if (d < 1) throw InvalidParameter("design dimension must be positive");
  Matrix cov = std::visit(
      overloaded{
          [&](const IdentityCov&) -> Matrix { return Matrix::Identity(d, d); },
          [&](const DiagonalCov& c) -> Matrix {
            if (c.values.size() != d) throw InvalidParameter("diagonal covariance needs d values");
            return c.values.asDiagonal();
          },
          [&](const ToeplitzCov& c) -> Matrix {
            Matrix m(d, d);
            for (Index i = 0; i < d; ++i)
              for (Index j = 0; j < d; ++j) m(i, j) = std::pow(c.rho, static_cast<double>(std::abs(i - j)));
            return m;
          },
          [&](const ExplicitCov& c) -> Matrix {
            if (c.matrix.rows() != d || c.matrix.cols() != d) throw InvalidParameter("explicit covariance must be d x d");
            return c.matrix;
          },
      },
      spec.covariance);
  if (!cov.allFinite() || !cov.isApprox(cov.transpose(), 1e-12)) {
    throw InvalidParameter("covariance must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidParameter("covariance must be positive definite");
  return cov;
}

double entrywise_nu4(const DesignFamily& family) {
  // E x_j^4 = 3 Sigma_jj^2 + (kurt - 3) sum_k L_jk^4 <= max(3, kurt) Sigma_jj^2
  const double kurt = std::visit(overloaded{
                                     [](const Gaussian&) { return 3.0; },
                                     [](const StudentT& s) {
                                       return s.dof > 4.0 ? 3.0 + 6.0 / (s.dof - 4.0)
                                                          : std::numeric_limits<double>::infinity();
                                     },
                                     [](const LaplaceProduct&) { return 6.0; },
                                     [](const UniformBox&) { return 1.8; },
                                 },
                                 family);
  return std::max(3.0, kurt);
}

Matrix sample_design(const DesignSpec& spec, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("sample_design: n must be >= 1");
  if (const auto* st = std::get_if<StudentT>(&spec.family); st && !(st->dof > 2.0)) {
    throw InvalidParameter("student-t design needs dof > 2 for a finite covariance");
  }
  const Matrix cov = covariance_matrix(spec);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidParameter("covariance must be positive definite");
  const Matrix lower = llt.matrixL();

  auto rng = detail::make_rng(seed, kDesign);
  Matrix z(n, spec.d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < spec.d; ++j) z(i, j) = standardized_draw(spec.family, rng);
  if (std::holds_alternative<IdentityCov>(spec.covariance)) return z;
  return z * lower.transpose();
}

double noise_sigma(const NoiseSpec& spec) {
  return std::visit(overloaded{
                        [](const GaussianNoise& g) { return g.sigma; },
                        [](const CauchyNoise& c) { return c.scale; },
                        [](const SparseInlierNoise& s) { return s.sigma; },
                    },
                    spec);
}

double noise_alpha(const NoiseSpec& spec) {
  return std::visit(overloaded{
                        [](const GaussianNoise&) { return kGaussianWithinOne; },
                        [](const CauchyNoise&) { return 0.5; },
                        [](const SparseInlierNoise& s) { return s.alpha; },
                    },
                    spec);
}

Vector sample_noise(const NoiseSpec& spec, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("sample_noise: n must be >= 1");
  auto rng = detail::make_rng(seed, kNoise);
  Vector eta(n);
  std::visit(overloaded{
                 [&](const GaussianNoise& g) {
                   if (!(g.sigma > 0)) throw InvalidParameter("gaussian noise sigma must be positive");
                   std::normal_distribution<double> dist(0.0, g.sigma);
                   for (Index i = 0; i < n; ++i) eta[i] = dist(rng);
                 },
                 [&](const CauchyNoise& c) {
                   if (!(c.scale > 0)) throw InvalidParameter("cauchy scale must be positive");
                   std::cauchy_distribution<double> dist(0.0, c.scale);
                   for (Index i = 0; i < n; ++i) eta[i] = dist(rng);
                 },
                 [&](const SparseInlierNoise& s) {
                   if (!(s.alpha > 0 && s.alpha <= 1) || !(s.sigma > 0)) {
                     throw InvalidParameter("sparse inlier noise needs alpha in (0,1] and sigma > 0");
                   }
                   const auto inliers = static_cast<Index>(std::ceil(s.alpha * static_cast<double>(n) - 1e-9));
                   const auto chosen = choose_rows(n, std::min(inliers, n), rng);
                   std::vector<bool> is_in(static_cast<size_t>(n), false);
                   for (Index i : chosen) is_in[i] = true;
                   std::uniform_real_distribution<double> small(-s.sigma, s.sigma);
                   std::exponential_distribution<double> tail(1.0);
                   for (Index i = 0; i < n; ++i) {
                     if (is_in[i]) {
                       eta[i] = small(rng);
                     } else {
                       const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
                       eta[i] = sign * s.spike_magnitude * (1.0 + tail(rng));
                     }
                   }
                 },
             },
             spec);
  return eta;
}

Vector sparse_beta(Index d, int k, double norm, std::uint64_t seed) {
  if (k < 1 || d < 1) throw InvalidParameter("sparse_beta: need d, k >= 1");
  auto rng = detail::make_rng(seed, kBeta);
  return norm * random_sparse_unit(d, k, rng);
}

CorruptionResult corrupt(const Matrix& design, const Vector& response, const GroundTruth& truth,
                         const AdversarySpec& spec, std::uint64_t seed) {
  const Index n = design.rows();
  const Index d = design.cols();
  if (response.size() != n) throw InvalidParameter("corrupt: response length mismatch");
  if (!(spec.epsilon >= 0 && spec.epsilon <= 1)) throw InvalidParameter("corrupt: epsilon must lie in [0, 1]");

  CorruptionResult out{design, response, std::vector<bool>(static_cast<size_t>(n), true), {}};
  if (std::holds_alternative<NoAttack>(spec.strategy)) return out;

  const auto count = static_cast<Index>(std::floor(spec.epsilon * static_cast<double>(n) + 1e-9));
  if (count == 0) return out;
  auto row_rng = detail::make_rng(seed, kAttackRows);
  const auto rows = choose_rows(n, count, row_rng);
  for (Index i : rows) out.good_mask[i] = false;
  out.zeta_support = rows;

  auto rng = detail::make_rng(seed, kAttackJunk);
  std::visit(overloaded{
                 [&](const NoAttack&) {},
                 [&](const RandomJunk& j) {
                   std::normal_distribution<double> dist(0.0, j.magnitude);
                   for (Index i : rows) {
                     for (Index c = 0; c < d; ++c) out.design(i, c) = dist(rng);
                     out.response[i] = dist(rng);
                   }
                 },
                 [&](const LeverageAttack& a) {
                   if (truth.beta_star.size() != d || truth.eta.size() != n) {
                     throw InvalidParameter("leverage attack needs beta_star and eta");
                   }
                   auto dir_rng = detail::make_rng(seed, kAttackDir);
                   Vector u;
                   if (a.direction_mode == LeverageDirection::random_sparse) {
                     u = random_sparse_unit(d, truth.k, dir_rng);
                   } else {
                     std::vector<Index> off;
                     for (Index c = 0; c < d; ++c)
                       if (truth.beta_star[c] == 0.0) off.push_back(c);
                     if (off.empty()) off.push_back(0);
                     std::uniform_int_distribution<size_t> pick(0, off.size() - 1);
                     u = Vector::Zero(d);
                     u[off[pick(dir_rng)]] = 1.0;
                   }
                   const double m = a.magnitude_scale *
                                    std::sqrt(static_cast<double>(n) / static_cast<double>(std::max(truth.k, 1)));
                   const Vector target = truth.beta_star + a.y_target_shift * u;
                   for (Index i : rows) {
                     out.design.row(i) += m * u.transpose();
                     out.response[i] = out.design.row(i).dot(target) + truth.eta[i];
                   }
                 },
                 [&](const LabelFlip&) {
                   for (Index i : rows) out.response[i] = -response[i];
                 },
             },
             spec.strategy);
  return out;
}

RegressionInstance make_instance(const InstanceSpec& spec) {
  const Matrix cov = covariance_matrix(spec.design);
  const Matrix clean = sample_design(spec.design, spec.n, spec.seed);
  GroundTruth truth;
  truth.k = spec.k;
  truth.seed = spec.seed;
  truth.covariance = cov;
  truth.beta_star = sparse_beta(spec.design.d, spec.k, spec.beta_norm, spec.seed);
  truth.eta = sample_noise(spec.noise, spec.n, spec.seed);
  const Vector y = clean * truth.beta_star + truth.eta;

  auto res = corrupt(clean, y, truth, spec.adversary, spec.seed);
  truth.good_mask = std::move(res.good_mask);
  truth.zeta_support = std::move(res.zeta_support);

  RegressionInstance inst;
  inst.design = std::move(res.design);
  inst.response = std::move(res.response);
  inst.sigma = noise_sigma(spec.noise);
  inst.epsilon = spec.adversary.epsilon > 0 ? spec.adversary.epsilon : spec.nominal_epsilon;
  Index within = 0;
  for (Index i = 0; i < spec.n; ++i) within += std::abs(truth.eta[i]) <= inst.sigma ? 1 : 0;
  inst.alpha = std::min(noise_alpha(spec.noise), static_cast<double>(within) / static_cast<double>(spec.n));
  inst.truth = std::move(truth);
  return inst;
}

double fourth_power_cprime(double epsilon) {
  // c + b (1 - c)^2 = 1/3, b = 1e-10 eps; take the root in [0, 1/3].
  const double b = 1e-10 * epsilon;
  if (b == 0.0) return 1.0 / 3.0;
  // b c^2 + (1 - 2b) c + (b - 1/3) = 0
  const double qa = b, qb = 1.0 - 2.0 * b, qc = b - 1.0 / 3.0;
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  return (2.0 * -qc) / (qb + disc);  // numerically stable smaller root
}

double MomentMatchedComponent::raw_moment(int order) const {
  // mixture of N(left, s2) and N(right, s2)
  auto gauss_raw = [&](double mean) {
    const double s2 = gauss_var;
    switch (order) {
      case 0:
        return 1.0;
      case 1:
        return mean;
      case 2:
        return mean * mean + s2;
      case 3:
        return mean * mean * mean + 3.0 * mean * s2;
      case 4:
        return std::pow(mean, 4) + 6.0 * mean * mean * s2 + 3.0 * s2 * s2;
      default:
        throw InvalidParameter("raw_moment supports orders 0..4");
    }
  };
  return right_prob * gauss_raw(right_point) + (1.0 - right_prob) * gauss_raw(left_point);
}

MomentMatchedComponent fourth_power_bad_component(double mu, double epsilon, double theta) {
  if (!(epsilon > 0 && epsilon < 1)) throw InvalidParameter("moment matching needs epsilon in (0,1)");
  // mixture (1-eps) N(mu, theta) + eps B must have moments 0, 1, 0 (orders 1..3)
  const double good1 = mu;
  const double good2 = mu * mu + theta;
  const double good3 = mu * mu * mu + 3.0 * mu * theta;
  const double m1 = -(1.0 - epsilon) * good1 / epsilon;
  const double m2 = (1.0 - (1.0 - epsilon) * good2) / epsilon;
  const double m3 = -(1.0 - epsilon) * good3 / epsilon;

  const double var = m2 - m1 * m1;
  if (!(var > 0)) throw InvalidParameter("moment matching infeasible for this conditional mean");
  MomentMatchedComponent b;
  b.gauss_var = 0.5 * var;
  const double point_var = var - b.gauss_var;
  // third central moment of B; the Gaussian part contributes none
  const double kappa3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
  const double skew = kappa3 / std::pow(point_var, 1.5);
  // two-point law with mean 0, variance 1 and skewness (1-2q)/sqrt(q(1-q)), q = P(right)
  const double q = 0.5 * (1.0 - skew / std::sqrt(skew * skew + 4.0));
  const double sd = std::sqrt(point_var);
  b.right_prob = q;
  b.right_point = m1 + sd * std::sqrt((1.0 - q) / q);
  b.left_point = m1 - sd * std::sqrt(q / (1.0 - q));
  return b;
}

RegressionInstance lb_mixture_instance(Index d, int k, Index n, double epsilon, MixtureVariant variant,
                                       std::uint64_t seed) {
  if (k < 1 || d < 1 || n < 1) throw InvalidParameter("lb_mixture: need d, k, n >= 1");
  if (static_cast<double>(k) > std::sqrt(static_cast<double>(d))) {
    throw InvalidParameter("lb_mixture: requires k <= sqrt(d)");
  }
  if (!(epsilon > 0 && epsilon < 0.5)) throw InvalidParameter("lb_mixture: epsilon must lie in (0, 1/2)");

  auto rng = detail::make_rng(seed, kMixture);
  const Vector v = random_sparse_unit(d, k, rng);

  const bool fourth = variant == MixtureVariant::fourth_power;
  const double beta_norm = fourth ? 1e-5 * std::sqrt(epsilon) : 1e-5;
  const double cprime = fourth ? fourth_power_cprime(epsilon) : 0.0;
  Matrix cov = Matrix::Identity(d, d) - cprime * v * v.transpose();
  const Vector beta = beta_norm * v;
  const double sig_beta = beta.dot(cov * beta);
  const double noise_var = 1.0 - sig_beta;  // sigma_y^2 = 1
  const double mu0 = (1.0 - cprime) * beta_norm;
  const double theta = fourth ? (1.0 - cprime) - (1.0 - cprime) * (1.0 - cprime) * beta_norm * beta_norm
                              : 1.0 - beta_norm * beta_norm;

  const auto bad_count = static_cast<Index>(std::floor(epsilon * static_cast<double>(n) + 1e-9));
  std::vector<bool> good(static_cast<size_t>(n), true);
  for (Index i : choose_rows(n, bad_count, rng)) good[i] = false;

  std::normal_distribution<double> std_normal(0.0, 1.0);
  Matrix x(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = std_normal(rng);
    Vector z(d);
    for (Index j = 0; j < d; ++j) z[j] = std_normal(rng);
    const double mu = mu0 * y[i];
    double along;
    if (good[i]) {
      along = mu + std::sqrt(theta) * std_normal(rng);
    } else if (!fourth) {
      along = -(1.0 - epsilon) / epsilon * mu + std_normal(rng);
    } else {
      const auto comp = fourth_power_bad_component(mu, epsilon, theta);
      const bool right = std::bernoulli_distribution(comp.right_prob)(rng);
      along = (right ? comp.right_point : comp.left_point) + std::sqrt(comp.gauss_var) * std_normal(rng);
    }
    z -= z.dot(v) * v;
    x.row(i) = (z + along * v).transpose();
  }

  GroundTruth truth;
  truth.beta_star = beta;
  truth.covariance = cov;
  truth.good_mask = good;
  truth.eta = y - x * beta;
  for (Index i = 0; i < n; ++i)
    if (!good[i]) truth.zeta_support.push_back(i);
  truth.k = k;
  truth.seed = seed;

  RegressionInstance inst;
  inst.design = std::move(x);
  inst.response = std::move(y);
  inst.sigma = std::sqrt(noise_var);
  inst.epsilon = epsilon;
  Index within = 0;
  for (Index i = 0; i < n; ++i) within += std::abs(truth.eta[i]) <= inst.sigma ? 1 : 0;
  inst.alpha = std::min(kGaussianWithinOne, static_cast<double>(within) / static_cast<double>(n));
  inst.truth = std::move(truth);
  return inst;
}

}  // namespace rsreg::datagen
