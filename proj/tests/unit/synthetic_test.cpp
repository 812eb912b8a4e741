#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "uqkit/density/kde.hpp"
#include "uqkit/model_error/avm.hpp"
#include "uqkit/surrogate/fit.hpp"
#include "uqkit/synthetic/systems.hpp"

namespace uqkit {
namespace {

TEST(BiasProfile, Kinds) {
  EXPECT_EQ(bias_profile(BiasKind::kConstant, 0.3, 5.0), 0.3);
  EXPECT_EQ(bias_profile(BiasKind::kLinear, 0.3, -2.0), -0.6);
  EXPECT_DOUBLE_EQ(bias_profile(BiasKind::kSmooth, 0.2, 0.0), 0.2);
  EXPECT_EQ(bias_kind_from_string("linear"), BiasKind::kLinear);
  EXPECT_EQ(std::string(to_string(BiasKind::kSmooth)), "smooth");
  EXPECT_THROW(bias_kind_from_string("cubic"), DomainError);
}

TEST(MafdsLike, ZeroBiasNoNoiseGivesModelOutputs) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0, 0.0);
  const PairedDataset exp = draw_experiment(s, 200, 1);
  EXPECT_EQ(exp.outputs(), s.model_on(exp.inputs()));
}

TEST(MafdsLike, TruthQuantileClosedForm) {
  EXPECT_NEAR(mafds_oracle::truth_quantile(0.95),
              kSqrtGain * std::sqrt(0.05 + 1.6448536269514722 * 0.0057), 1e-12);
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0, 0.0);
  const InputSample x = draw_inputs(s, 1000000, 2);
  const double mc = mc_quantile(s.truth_on(x.points()), 0.95).value;
  EXPECT_NEAR(mc, mafds_oracle::truth_quantile(0.95), 2e-4);
}

TEST(MafdsLike, CdfAndDensityAgree) {
  const double y0 = mafds_oracle::truth_quantile(0.2);
  const double y1 = mafds_oracle::truth_quantile(0.7);
  const int steps = 20000;
  double area = 0.0;
  for (int i = 0; i < steps; ++i) {
    area += mafds_oracle::truth_density(y0 + (i + 0.5) * (y1 - y0) / steps) * (y1 - y0) / steps;
  }
  EXPECT_NEAR(area, 0.5, 1e-8);
  EXPECT_NEAR(mafds_oracle::truth_cdf(y1), 0.7, 1e-12);
}

TEST(MafdsLike, ConstantBiasAvm) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0, 0.003);
  const PairedDataset exp = draw_experiment(s, 500, 3);
  const PairedDataset sim = draw_simulation(s, 500, 3);
  const AvmResult r = avm(to_std_vector(exp.outputs()), to_std_vector(sim.outputs()), 1000);
  EXPECT_NEAR(r.exact, 0.003, 1e-12);
}

TEST(MafdsLike, LinearBiasQuantile) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kLinear, 0.0, 0.003);
  const InputSample x = draw_inputs(s, 400000, 4);
  const Vector b = s.bias_on(x.points()).cwiseAbs();
  EXPECT_NEAR(mc_quantile(b, 0.95).value,
              mafds_oracle::abs_bias_quantile(BiasKind::kLinear, 0.003, 0.95), 5e-5);
  EXPECT_THROW(mafds_oracle::abs_bias_quantile(BiasKind::kSmooth, 0.003, 0.95), DomainError);
}

TEST(HidimLike, ZeroBiasNoNoiseGivesModelOutputs) {
  const SyntheticSystem s = make_hidim_like(BiasKind::kConstant, 0.0, 0.0);
  EXPECT_EQ(s.dim(), 5);
  const PairedDataset exp = draw_experiment(s, 100, 5);
  EXPECT_EQ(exp.outputs(), s.model_on(exp.inputs()));
}

TEST(HidimLike, QuantileIsStable) {
  const SyntheticSystem s = make_hidim_like(BiasKind::kConstant, 0.0, 0.0);
  const double a = mc_quantile(s.truth_on(draw_inputs(s, 400000, 6).points()), 0.95).value;
  const double b = mc_quantile(s.truth_on(draw_inputs(s, 400000, 7).points()), 0.95).value;
  EXPECT_NEAR(a, b, 0.01);
  EXPECT_GT(a, 14.3);
}

TEST(HidimLike, ConstantBiasAvm) {
  const SyntheticSystem s = make_hidim_like(BiasKind::kConstant, 0.0, -0.2);
  const PairedDataset exp = draw_experiment(s, 300, 8);
  const PairedDataset sim = draw_simulation(s, 300, 8);
  const AvmResult r = avm(to_std_vector(exp.outputs()), to_std_vector(sim.outputs()), 1000);
  EXPECT_NEAR(r.exact, 0.2, 1e-12);
}

TEST(Draws, Validation) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0);
  EXPECT_THROW(draw_experiment(s, 0, 1), DomainError);
  EXPECT_THROW(make_mafds_like(BiasKind::kConstant, -1.0), DomainError);
  EXPECT_THROW(make_hidim_like(BiasKind::kConstant, -1.0), DomainError);
}

TEST(Draws, ReproducibleAndSeedDependent) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kSmooth, 0.001);
  const PairedDataset a = draw_experiment(s, 50, 9);
  const PairedDataset b = draw_experiment(s, 50, 9);
  const PairedDataset c = draw_experiment(s, 50, 10);
  EXPECT_EQ(a.inputs(), b.inputs());
  EXPECT_EQ(a.outputs(), b.outputs());
  EXPECT_NE(a.inputs(), c.inputs());
}

TEST(Draws, NoiseHasRequestedScale) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.002, 0.0);
  const PairedDataset exp = draw_experiment(s, 100000, 11);
  const Vector noise = exp.outputs() - s.truth_on(exp.inputs());
  const double mean = noise.mean();
  const double sd = std::sqrt((noise.array() - mean).square().mean());
  EXPECT_LT(std::abs(mean), 4.0 * 0.002 / std::sqrt(100000.0));
  EXPECT_NEAR(sd, 0.002, 0.002 * 0.02);
}

TEST(Draws, InputMeanWithinFourSigma) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0);
  const InputSample x = draw_inputs(s, 100000, 12);
  EXPECT_LT(std::abs(x.points().col(0).mean() - kDropHeightMean),
            4.0 * kDropHeightStd / std::sqrt(100000.0));
}

TEST(Draws, ZeroBiasResidualModelVanishes) {
  const SyntheticSystem s = make_mafds_like(BiasKind::kConstant, 0.0, 0.0);
  const PairedDataset exp = draw_experiment(s, 30, 13);
  const Vector r = exp.outputs() - s.model_on(exp.inputs());
  FunctionFamily family;
  family.kind = FamilyKind::kPolyRidge;
  family.degree = 2;
  const SurrogateModel m = fit_residual_model(family, exp.inputs(), r);
  EXPECT_LT(m.evaluate(exp.inputs()).cwiseAbs().maxCoeff(), 1e-6);
}

}  // namespace
}  // namespace uqkit
