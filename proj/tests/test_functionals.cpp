#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "memsfde/functionals.hpp"

using namespace memsfde;

namespace {

struct Samples {
  std::vector<double> v;
  double window;
  HistorySegment seg(double t = 0.0) const {
    return HistorySegment{t, window, window / static_cast<double>(v.size() - 1), v};
  }
};

Samples linear(std::size_t n) {
  Samples s{std::vector<double>(n + 1), 1.0};
  for (std::size_t i = 0; i <= n; ++i) s.v[i] = -1.0 + static_cast<double>(i) / static_cast<double>(n);
  return s;
}

Samples sawtooth() {
  Samples s{std::vector<double>(41), 0.5};
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = 100.0 + static_cast<double>(i % 5) - 0.3 * (i % 3);
  return s;
}

/// Trapezoid integral of a tabulated function, written out long-hand.
double brute_trapezoid(const std::vector<double>& y, double h) {
  double acc = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) acc += 0.5 * h * (y[i - 1] + y[i]);
  return acc;
}

}  // namespace

TEST(Functionals, ConstantIgnoresSegment) {
  const auto f = FunctionalSpec::constant(0.05);
  EXPECT_EQ(f(0.0, sawtooth().seg()), 0.05);
  EXPECT_EQ(f(3.0, linear(8).seg()), 0.05);
  EXPECT_FALSE(f.history_dependent());
  EXPECT_EQ(f.lipschitz(), 0.0);
}

TEST(Functionals, MovingAverageOfConstant) {
  Samples s{std::vector<double>(9, 3.5), 0.5};
  EXPECT_DOUBLE_EQ(FunctionalSpec::moving_average(0.5)(0.0, s.seg()), 3.5);
}

TEST(Functionals, MovingAverageOfIdentity) {
  // trapezoid is exact for a linear integrand
  EXPECT_NEAR(FunctionalSpec::moving_average(1.0)(0.0, linear(16).seg()), -0.5, 1e-15);
}

TEST(Functionals, WindowMismatchRejected) {
  EXPECT_THROW(FunctionalSpec::moving_average(0.5)(0.0, linear(16).seg()), ValidationError);
}

TEST(Functionals, RealizedVolOfConstantIsFloored) {
  Samples s{std::vector<double>(9, 7.0), 0.5};
  EXPECT_EQ(FunctionalSpec::realized_vol(0.5, 0.05, 1.0)(0.0, s.seg()), 0.05);
}

TEST(Functionals, RealizedVolOfIdentity) {
  // continuous value is 1/sqrt(12); the trapezoid error is O(h^2)
  const double exact = 1.0 / std::sqrt(12.0);
  const auto rv = FunctionalSpec::realized_vol(1.0, 0.01, 10.0);
  EXPECT_NEAR(rv(0.0, linear(64).seg()), exact, 1e-4);
  EXPECT_NEAR(rv(0.0, linear(1024).seg()), exact, 1e-6);
  EXPECT_NEAR(rv(0.0, linear(64).seg()), 0.28867513459481287, 1e-4);
}

TEST(Functionals, SawtoothMatchesBruteTrapezoid) {
  const auto s = sawtooth();
  const double h = s.window / 40.0;
  const double mean = brute_trapezoid(s.v, h) / s.window;
  std::vector<double> sq(s.v.size());
  for (std::size_t i = 0; i < s.v.size(); ++i) sq[i] = (s.v[i] - mean) * (s.v[i] - mean);
  const double rv = std::sqrt(brute_trapezoid(sq, h) / s.window);
  EXPECT_NEAR(FunctionalSpec::moving_average(0.5)(0.0, s.seg()), mean, 1e-12);
  EXPECT_NEAR(FunctionalSpec::realized_vol(0.5, 1e-6, 100.0)(0.0, s.seg()), rv, 1e-12);
}

TEST(Functionals, RealizedVolClampedToCap) {
  Samples s{{1.0, 100.0, 1.0, 100.0, 1.0}, 1.0};
  EXPECT_EQ(FunctionalSpec::realized_vol(1.0, 0.01, 2.0)(0.0, s.seg()), 2.0);
}

TEST(Functionals, AffineComposesLinearly) {
  const auto s = sawtooth();
  const auto ma = FunctionalSpec::moving_average(0.5);
  const auto aff = FunctionalSpec::affine_of(ma, 0.002, -0.1);
  EXPECT_NEAR(aff(0.0, s.seg()), 0.002 * ma(0.0, s.seg()) - 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(aff.lipschitz(), 0.002);
  EXPECT_EQ(*aff.window(), 0.5);
}

TEST(Functionals, MovingAverageIsLinearAndRealizedVolTranslationInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(50.0, 150.0);
  const auto ma = FunctionalSpec::moving_average(0.5);
  const auto rv = FunctionalSpec::realized_vol(0.5, 1e-6, 1e6);
  for (int trial = 0; trial < 50; ++trial) {
    Samples a{std::vector<double>(17), 0.5}, b = a, mix = a, shifted = a;
    for (std::size_t i = 0; i < 17; ++i) {
      a.v[i] = u(gen);
      b.v[i] = u(gen);
      mix.v[i] = 2.0 * a.v[i] - 3.0 * b.v[i];
      shifted.v[i] = a.v[i] + 25.0;
    }
    EXPECT_NEAR(ma(0.0, mix.seg()), 2.0 * ma(0.0, a.seg()) - 3.0 * ma(0.0, b.seg()), 1e-10);
    EXPECT_NEAR(rv(0.0, shifted.seg()), rv(0.0, a.seg()), 1e-10);
  }
}

TEST(Functionals, RejectsNonFiniteSamples) {
  Samples s{{1.0, std::nan(""), 1.0}, 1.0};
  EXPECT_THROW(FunctionalSpec::moving_average(1.0)(0.0, s.seg()), ValidationError);
}

TEST(Functionals, FactoriesValidate) {
  EXPECT_THROW(FunctionalSpec::moving_average(0.0), ValidationError);
  EXPECT_THROW(FunctionalSpec::realized_vol(0.5, 0.0, 1.0), ValidationError);
  EXPECT_THROW(FunctionalSpec::realized_vol(0.5, 0.3, 0.2), ValidationError);
  EXPECT_THROW(require_positive_vol(FunctionalSpec::constant(0.0)), ValidationError);
  EXPECT_NO_THROW(require_positive_vol(FunctionalSpec::moving_average(0.5)));
  EXPECT_THROW(require_positive_vol(FunctionalSpec::affine_of(FunctionalSpec::moving_average(0.5), 1.0, -1.0)),
               ValidationError);
  EXPECT_NO_THROW(require_positive_vol(FunctionalSpec::realized_vol(0.5, 0.05, 1.0)));
}

TEST(ValidateBounds, ConstantVol) {
  const auto s = sawtooth();
  const std::vector<HistorySegment> probes{s.seg(), linear(40).seg()};
  const auto r = validate_bounds(FunctionalSpec::constant(0.2), probes);
  EXPECT_EQ(r.min_value, 0.2);
  EXPECT_EQ(r.max_value, 0.2);
  EXPECT_TRUE(r.ok());
}

TEST(ValidateBounds, ClampedRangeInsideBounds) {
  std::mt19937_64 gen(5);
  std::lognormal_distribution<double> ln(0.0, 0.8);
  std::vector<Samples> store(200, Samples{std::vector<double>(33), 0.5});
  std::vector<HistorySegment> probes;
  for (auto& s : store) {
    for (auto& x : s.v) x = ln(gen);
    probes.push_back(s.seg());
  }
  const auto r = validate_bounds(FunctionalSpec::realized_vol(0.5, 0.05, 0.6), probes);
  EXPECT_GE(r.min_value, 0.05);
  EXPECT_LE(r.max_value, 0.6);
  EXPECT_FALSE(r.bound_violation);
}

TEST(ValidateBounds, LipschitzProbeForMovingAverage) {
  // pairs differing by eps in sup norm; the ratio must stay under the declared constant
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double eps = 1e-3;
  std::vector<Samples> store;
  for (int i = 0; i < 40; ++i) {
    Samples base{std::vector<double>(17), 0.25};
    for (auto& x : base.v) x = 100.0 + 10.0 * u(gen);
    Samples bumped = base;
    for (auto& x : bumped.v) x += eps * u(gen);
    store.push_back(base);
    store.push_back(bumped);
  }
  std::vector<HistorySegment> probes;
  for (const auto& s : store) probes.push_back(s.seg());
  const auto ma = FunctionalSpec::moving_average(0.25);
  const auto r = validate_bounds(ma, probes);
  EXPECT_LE(r.lipschitz_ratio, ma.lipschitz() * (1.0 + 1e-9));
  EXPECT_FALSE(r.lipschitz_violation);

  const auto tight = ma.with_declared_lipschitz(1e-3);
  EXPECT_TRUE(validate_bounds(tight, probes).lipschitz_violation);
}

TEST(ValidateBounds, DeclaredBoundIsChecked) {
  const auto s = sawtooth();
  const std::vector<HistorySegment> probes{s.seg()};
  const auto ma = FunctionalSpec::moving_average(0.5).with_declared_max_abs(10.0);
  EXPECT_TRUE(validate_bounds(ma, probes).bound_violation);
}
