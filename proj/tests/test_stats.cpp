#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "memsfde/stats.hpp"

using namespace memsfde;

TEST(Stats, PairwiseSumMatchesExactIntegers) {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
}

TEST(Stats, EstimateOfKnownSample) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto e = estimate(v);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.std_error, std::sqrt((5.0 / 3.0) / 4.0));
  EXPECT_DOUBLE_EQ(e.ci_hi() - e.ci_lo(), 2 * 1.96 * e.std_error);
  EXPECT_EQ(estimate(std::vector<double>{7.0}).std_error, 0.0);
}

TEST(Stats, ParallelForIsScheduleIndependent) {
  std::vector<double> one(1001), many(1001);
  const auto fill = [](std::vector<double>& out, std::size_t threads) {
    parallel_for(
        out.size(), threads, [] { return 0; },
        [&](int&, std::size_t i) { out[i] = std::sin(static_cast<double>(i)); });
  };
  fill(one, 1);
  fill(many, 4);
  EXPECT_EQ(one, many);
}

TEST(Stats, ParallelForRethrows) {
  EXPECT_THROW(parallel_for(
                   100, 3, [] { return 0; },
                   [](int&, std::size_t i) {
                     if (i == 57) throw std::runtime_error("boom");
                   }),
               std::runtime_error);
}

TEST(Stats, FitSlopeOfExactLine) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, -1.0, -3.0, -5.0};
  EXPECT_DOUBLE_EQ(fit_slope(x, y), -2.0);
}
