#include <gtest/gtest.h>

#include <cmath>

#include "memsfde/diagnostics.hpp"

using namespace memsfde;

namespace {

SimulationConfig base_cfg(std::size_t replicates) {
  SimulationConfig cfg;
  cfg.horizon = 1.0;
  cfg.gap = 0.25;
  cfg.window = 0.5;
  cfg.dt = 1.0 / 64;
  cfg.seed = 31415;
  cfg.replicates = replicates;
  return cfg;
}

const FunctionalSpec kDrift = FunctionalSpec::constant(0.1);
const FunctionalSpec kVol = FunctionalSpec::constant(0.2);

FunctionalSpec ma_drift() { return FunctionalSpec::affine_of(FunctionalSpec::moving_average(0.5), 0.001, 0.0); }
FunctionalSpec rv_vol() {
  return FunctionalSpec::affine_of(FunctionalSpec::realized_vol(0.5, 0.05, 20.0), 0.01, 0.1);
}

InitialPath holder(double dt = 1.0 / 64) { return make_holder_path(0.4, 7, 0.5, 100.0, dt); }

}  // namespace

TEST(HolderPath, DeterministicAndPositive) {
  const auto a = holder(), b = holder();
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_EQ(a.present(), 100.0);
  for (double v : a.values()) EXPECT_GT(v, 0.0);
  const auto c = make_holder_path(0.4, 8, 0.5, 100.0, 1.0 / 64);
  EXPECT_NE(a.values()[0], c.values()[0]);
  EXPECT_THROW(make_holder_path(0.5, 7, 0.5, 100.0, 1.0 / 64), ValidationError);
}

TEST(HolderPath, RatioStableUnderRefinement) {
  const double dt = 1.0 / 4096;
  const auto fine = make_holder_path(0.4, 3, 0.5, 100.0, dt);
  const auto v = fine.values();
  std::vector<double> coarse;
  for (std::size_t i = 0; i < v.size(); i += 4) coarse.push_back(v[i]);
  const double rf = holder_ratio(v, dt, 0.49);
  const double rc = holder_ratio(coarse, 4 * dt, 0.49);
  EXPECT_TRUE(std::isfinite(rf));
  EXPECT_GE(rf, rc);
  EXPECT_LE(rf / rc, 3.0);
}

TEST(HolderRatio, LinearPathHasUnitLipschitzRatio) {
  std::vector<double> x(11);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i);
  EXPECT_NEAR(holder_ratio(x, 0.1, 1.0), 1.0, 1e-12);
}

TEST(Convergence, ConstantCoefficientsAreDegenerate) {
  const std::vector<int> ks{2, 4, 8};
  const auto rep = convergence_study(ks, 0.4, holder(), kDrift, kVol, base_cfg(50));
  EXPECT_TRUE(rep.degenerate);
  EXPECT_TRUE(rep.pass());
  for (const auto& e : rep.discrepancies) EXPECT_EQ(e.mean, 0.0);
}

TEST(Convergence, ReproducibleAndDecreasing) {
  const std::vector<int> ks{2, 4, 8, 16};
  const auto cfg = base_cfg(300);
  const auto a = convergence_study(ks, 0.4, holder(), ma_drift(), rv_vol(), cfg);
  const auto b = convergence_study(ks, 0.4, holder(), ma_drift(), rv_vol(), cfg);
  ASSERT_FALSE(a.degenerate);
  for (std::size_t i = 0; i < ks.size(); ++i) EXPECT_EQ(a.discrepancies[i].mean, b.discrepancies[i].mean);
  EXPECT_EQ(a.fitted_slope, b.fitted_slope);
  EXPECT_LT(a.fitted_slope, 0.0);
  EXPECT_TRUE(a.monotone);
  EXPECT_EQ(a.theoretical_slope, -0.8);
}

TEST(Convergence, ValidatesInputs) {
  const auto cfg = base_cfg(10);
  const std::vector<int> two{2, 4};
  EXPECT_THROW(convergence_study(two, 0.4, holder(), ma_drift(), rv_vol(), cfg), ValidationError);
  const std::vector<int> too_fine{8, 16, 64};
  EXPECT_THROW(convergence_study(too_fine, 0.4, holder(), ma_drift(), rv_vol(), cfg), ValidationError);
  const std::vector<int> unsorted{4, 2, 8};
  EXPECT_THROW(convergence_study(unsorted, 0.4, holder(), ma_drift(), rv_vol(), cfg), ValidationError);
}

TEST(Normalization, DriftEqualToRateIsExact) {
  const auto rep = normalization_check(holder(), FunctionalSpec::constant(0.05), kVol, 0.05, base_cfg(500));
  EXPECT_EQ(rep.rows[0].value.mean, 1.0);
  EXPECT_EQ(rep.rows[0].value.std_error, 0.0);
  EXPECT_TRUE(rep.pass);
}

TEST(Normalization, PathDependentPasses) {
  const auto g = FunctionalSpec::affine_of(FunctionalSpec::realized_vol(0.5, 0.05, 20.0), 0.02, 0.1);
  const auto rep = normalization_check(holder(), ma_drift(), g, 0.05, base_cfg(20'000));
  EXPECT_TRUE(rep.pass) << rep.rows[0].value.mean << " +- " << rep.rows[0].value.std_error;
}

TEST(Martingale, ConstantAndPathDependent) {
  const MarketConfig mkt{0.05, 100.0, 1.0};
  EXPECT_TRUE(martingale_check(holder(), kDrift, kVol, base_cfg(20'000), mkt).pass);
  const auto rep = martingale_check(holder(), ma_drift(), rv_vol(), base_cfg(20'000), mkt);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rep.rows[0].parameter, 0.25);
  EXPECT_DOUBLE_EQ(rep.rows[2].parameter, 1.0);
  EXPECT_TRUE(rep.pass);
}

TEST(Martingale, ZeroRateIsFlat) {
  const MarketConfig mkt{0.0, 100.0, 1.0};
  const auto g = FunctionalSpec::realized_vol(0.5, 0.05, 1.0);
  const auto rep = martingale_check(InitialPath::constant(0.5, 1.0 / 64, 1.0), ma_drift(), g, base_cfg(20'000), mkt);
  EXPECT_TRUE(rep.pass);
  for (const auto& row : rep.rows) EXPECT_EQ(row.target, 1.0);
}

TEST(MomentBound, ConstantCoefficientsGiveRatioOne) {
  const std::vector<int> ks{2, 4, 8, 16};
  const auto rep = moment_bound_check(ks, 1, holder(), kDrift, kVol, base_cfg(500));
  EXPECT_EQ(rep.statistic, 1.0);
  EXPECT_TRUE(rep.pass);
}

TEST(MomentBound, JensenBetweenGammas) {
  const std::vector<int> ks{2, 4, 8, 16};
  const auto cfg = base_cfg(2000);
  const auto one = moment_bound_check(ks, 1, holder(), ma_drift(), rv_vol(), cfg);
  const auto two = moment_bound_check(ks, 2, holder(), ma_drift(), rv_vol(), cfg);
  EXPECT_TRUE(one.pass);
  EXPECT_TRUE(two.pass);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double m1 = one.rows[i].value.mean;
    EXPECT_GE(two.rows[i].value.mean, m1 * m1 * (1.0 - 1e-12));
  }
  EXPECT_THROW(moment_bound_check(ks, 3, holder(), ma_drift(), rv_vol(), cfg), ValidationError);
}

TEST(IncrementBound, ConstantCoefficientsGiveRatioOne) {
  const std::vector<int> ks{2, 4, 8};
  const auto rep = increment_bound_check(ks, holder(), kDrift, kVol, base_cfg(300));
  EXPECT_EQ(rep.statistic, 1.0);
  EXPECT_TRUE(rep.pass);
}

TEST(IncrementBound, PathDependentIsUniform) {
  const std::vector<int> ks{2, 4, 8, 16};
  const auto rep = increment_bound_check(ks, holder(), ma_drift(), rv_vol(), base_cfg(1000));
  EXPECT_TRUE(rep.pass) << rep.statistic;
  for (const auto& row : rep.rows) EXPECT_GT(row.value.mean, 0.0);
}

TEST(MeasureConsistency, WeightedPhysicalMatchesRiskNeutral) {
  const MarketConfig mkt{0.05, 100.0, 1.0};
  const auto rep = measure_consistency_check(holder(), ma_drift(), rv_vol(), base_cfg(20'000), mkt);
  EXPECT_TRUE(rep.pass) << rep.statistic;
  ASSERT_EQ(rep.rows.size(), 2u);
}
