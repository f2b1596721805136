#include <gtest/gtest.h>

#include <cmath>

#include "memsfde/random.hpp"
#include "memsfde/stats.hpp"

using namespace memsfde;

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, OpenUnitNeverHitsEndpoints) {
  EXPECT_GT(NormalStream::to_open_unit(0, 0), 0.0);
  EXPECT_LT(NormalStream::to_open_unit(0xffffffff, 0xffffffff), 1.0);
}

TEST(NormalStream, SameSeedAndStreamRepeat) {
  NormalStream a(123, 7), b(123, 7), c(123, 8), d(124, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next();
    EXPECT_EQ(x, b.next());
    differs_c |= x != c.next();
    differs_d |= x != d.next();
  }
  EXPECT_TRUE(differs_c);
  EXPECT_TRUE(differs_d);
}

TEST(NormalStream, FillMatchesNext) {
  NormalStream a(9, 1), b(9, 1);
  std::vector<double> v(11);
  a.fill(v, 0.5);
  for (double x : v) EXPECT_EQ(x, 0.5 * b.next());
}

TEST(BrownianIncrements, MeanAndVarianceWithin3SE) {
  const double dt = 1.0 / 256;
  const auto dw = brownian_increments(2024, 0, 1'000'000, dt);
  const auto m = estimate(dw);
  EXPECT_LE(std::abs(m.mean), 3.0 * m.std_error);
  std::vector<double> sq(dw.size());
  for (std::size_t i = 0; i < dw.size(); ++i) sq[i] = dw[i] * dw[i];
  const auto v = estimate(sq);
  EXPECT_LE(std::abs(v.mean - dt), 3.0 * v.std_error);
}

TEST(BrownianIncrements, StreamsAreUncorrelated) {
  const auto a = brownian_increments(1, 0, 100'000, 1.0);
  const auto b = brownian_increments(1, 1, 100'000, 1.0);
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  const auto e = estimate(prod);
  EXPECT_LE(std::abs(e.mean), 4.0 * e.std_error);
}
