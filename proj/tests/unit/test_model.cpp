#include <filesystem>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "rsreg/datagen.hpp"
#include "rsreg/instance_io.hpp"
#include "rsreg/model.hpp"

using namespace rsreg;

namespace {

RegressionInstance small_instance() {
  datagen::InstanceSpec s;
  s.n = 40;
  s.k = 2;
  s.design.d = 5;
  s.adversary.strategy = datagen::RandomJunk{};
  s.adversary.epsilon = 0.1;
  s.noise = datagen::GaussianNoise{1.0};
  s.seed = 9;
  return datagen::make_instance(s);
}

bool names(const std::vector<Violation>& v, const std::string& field, const std::string& fragment) {
  for (const auto& x : v)
    if (x.field == field && x.rule.find(fragment) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(ValidateInstance, WellFormedIsEmpty) { EXPECT_TRUE(validate_instance(small_instance()).empty()); }

TEST(ValidateInstance, ShortResponse) {
  auto inst = small_instance();
  inst.response.conservativeResize(inst.n() - 1);
  const auto v = validate_instance(inst);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(names(v, "response", "response length"));
}

TEST(ValidateInstance, EpsilonOutOfRange) {
  auto inst = small_instance();
  inst.epsilon = 0.6;
  EXPECT_TRUE(names(validate_instance(inst), "epsilon", "epsilon out of range"));
}

TEST(ValidateInstance, EpsilonAgainstAlpha) {
  auto inst = small_instance();
  inst.alpha = 0.2;
  inst.epsilon = 0.1;
  EXPECT_TRUE(names(validate_instance(inst, 4.0), "epsilon", "alpha"));
  EXPECT_FALSE(names(validate_instance(inst, 1.0), "epsilon", "alpha"));
}

TEST(ValidateInstance, TooManyNonzerosInBeta) {
  auto inst = small_instance();
  inst.truth->beta_star.setOnes();
  EXPECT_TRUE(names(validate_instance(inst), "truth.beta_star", "k"));
}

TEST(ValidateInstance, Pure) {
  auto inst = small_instance();
  inst.sigma = -1;
  const auto a = validate_instance(inst);
  const auto b = validate_instance(inst);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].rule, b[i].rule);
}

TEST(Rescale, DividesResponse) {
  RegressionInstance inst;
  inst.design = Matrix::Identity(2, 2);
  inst.response = Vector(2);
  inst.response << 4, -2;
  inst.sigma = 2.0;
  auto [scaled, rec] = rescale_by_sigma(inst);
  EXPECT_EQ(scaled.response[0], 2.0);
  EXPECT_EQ(scaled.response[1], -1.0);
  EXPECT_EQ(scaled.sigma, 1.0);
  EXPECT_EQ(rec.sigma, 2.0);
  EXPECT_EQ(scaled.design, inst.design);
}

TEST(Rescale, UnitSigmaIsIdentity) {
  auto inst = small_instance();
  inst.sigma = 1.0;
  auto [scaled, rec] = rescale_by_sigma(inst);
  EXPECT_EQ(scaled.response, inst.response);
  EXPECT_EQ(scaled.design, inst.design);
}

TEST(Rescale, RoundTrip) {
  auto inst = small_instance();
  inst.sigma = 8.0;
  auto [a, ra] = rescale_by_sigma(inst);
  EXPECT_EQ(a.response * ra.sigma, inst.response);
  inst.sigma = 3.3;
  auto [b, rb] = rescale_by_sigma(inst);
  EXPECT_LE((b.response * rb.sigma - inst.response).norm(), 1e-12 * inst.response.norm());
}

TEST(Rescale, RejectsNonPositiveSigma) {
  auto inst = small_instance();
  inst.sigma = 0.0;
  EXPECT_THROW(rescale_by_sigma(inst), InvalidParameter);
}

TEST(Config, DefaultsFollowT) {
  const auto c1 = EstimatorConfig::defaults_for(1);
  EXPECT_EQ(c1.ell, 2);
  EXPECT_EQ(c1.c_threshold, 10.0);
  EXPECT_EQ(c1.c_lambda, 1000.0);
  EXPECT_EQ(c1.c_tau, 0.01);
  const auto c2 = EstimatorConfig::defaults_for(2);
  EXPECT_EQ(c2.ell, 4);
  EXPECT_EQ(c2.c_threshold, 100.0);
  EXPECT_EQ(c2.backend.kind, BackendKind::lite_quartic_t2);
}

TEST(Config, ValidateRejectsOddEll) {
  auto c = EstimatorConfig::defaults_for(1);
  c.ell = 3;
  EXPECT_THROW(validate_config(c), InvalidParameter);
  c.ell = 2;
  c.t = 2;
  EXPECT_THROW(validate_config(c), InvalidParameter);
}

TEST(Config, JsonRoundTrip) {
  auto c = EstimatorConfig::defaults_for(2);
  c.k = 7;
  c.lambda = 0.25;
  c.backend.kind = BackendKind::full_sos;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.k, 7);
  EXPECT_EQ(back.t, 2);
  ASSERT_TRUE(back.lambda.has_value());
  EXPECT_EQ(*back.lambda, 0.25);
  EXPECT_EQ(back.backend.kind, BackendKind::full_sos);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(config_from_json(R"({"k": 2, "lamda": 1})"), InvalidParameter);
  EXPECT_THROW(config_from_json("[1]"), InvalidParameter);
}

TEST(InstanceIo, RoundTripIsExact) {
  const auto inst = small_instance();
  const auto dir = std::filesystem::temp_directory_path() / "rsreg_io_roundtrip";
  std::filesystem::remove_all(dir);
  write_instance(inst, dir);
  const auto back = read_instance(dir);
  EXPECT_EQ(back.design, inst.design);
  EXPECT_EQ(back.response, inst.response);
  EXPECT_EQ(back.sigma, inst.sigma);
  EXPECT_EQ(back.epsilon, inst.epsilon);
  ASSERT_TRUE(back.truth.has_value());
  EXPECT_EQ(back.truth->beta_star, inst.truth->beta_star);
  EXPECT_EQ(back.truth->good_mask, inst.truth->good_mask);
  std::filesystem::remove_all(dir);
}
