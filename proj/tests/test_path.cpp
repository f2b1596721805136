#include <gtest/gtest.h>

#include <sstream>

#include "memsfde/engine.hpp"
#include "memsfde/path.hpp"

using namespace memsfde;

namespace {

InitialPath linear_theta(double dt) {
  // theta(u) = 100 + 10u on [-1, 0]
  const std::size_t n = whole_steps(1.0, dt, "L");
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = 100.0 + 10.0 * (-1.0 + static_cast<double>(i) * dt);
  return InitialPath(1.0, dt, v);
}

}  // namespace

TEST(Grid, WholeStepsRejectsNonDivisor) {
  EXPECT_EQ(whole_steps(0.5, 0.125, "l"), 4u);
  EXPECT_THROW(whole_steps(0.5, 0.3, "l"), ValidationError);
  EXPECT_TRUE(divides(0.1, 0.3));
  EXPECT_FALSE(divides(0.3, 0.5));
}

TEST(Grid, IndexOfRoundTrips) {
  TimeGrid g(-1.25, 1.0 / 64, 144);
  for (std::size_t i = 0; i <= g.count(); ++i) EXPECT_EQ(g.index_of(g.time(i)), i);
  EXPECT_THROW(g.index_of(0.001), ValidationError);
  EXPECT_DOUBLE_EQ(g.end(), 1.0);
}

TEST(ExtendInitial, ConstantPathStaysConstant) {
  const auto theta = InitialPath::constant(1.0, 0.0625, 100.0);
  const auto hat = extend_initial(theta, 0.25);
  EXPECT_DOUBLE_EQ(hat.extension(), 0.25);
  EXPECT_EQ(hat.values().size(), 21u);
  for (double v : hat.values()) EXPECT_EQ(v, 100.0);
}

TEST(ExtendInitial, LinearPathIsFlatBeforeWindow) {
  const double dt = 0.0625;
  const auto hat = extend_initial(linear_theta(dt), 0.5);
  const auto v = hat.values();
  ASSERT_EQ(v.size(), 25u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = -1.5 + static_cast<double>(i) * dt;
    const double expected = u <= -1.0 ? 90.0 : 100.0 + 10.0 * u;
    EXPECT_NEAR(v[i], expected, 1e-12) << "u = " << u;
  }
  EXPECT_NEAR(hat.at(-1.25), 90.0, 1e-12);
  EXPECT_NEAR(hat.at(-0.5), 95.0, 1e-12);
}

TEST(ExtendInitial, ZeroGapIsIdentity) {
  const auto theta = linear_theta(0.125);
  const auto hat = extend_initial(theta, 0.0);
  ASSERT_EQ(hat.values().size(), theta.values().size());
  for (std::size_t i = 0; i < hat.values().size(); ++i) EXPECT_EQ(hat.values()[i], theta.values()[i]);
}

TEST(ExtendInitial, ReextensionStartsFromBase) {
  const auto theta = linear_theta(0.125);
  const auto twice = extend_initial(extend_initial(theta, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(twice.extension(), 0.25);
  EXPECT_EQ(twice.values().size(), theta.values().size() + 2);
}

TEST(InitialPath, RejectsNonPositiveAndWrongLength) {
  EXPECT_THROW(InitialPath(1.0, 0.5, {1.0, 0.0, 1.0}), ValidationError);
  EXPECT_THROW(InitialPath(1.0, 0.5, {1.0, 1.0}), ValidationError);
  EXPECT_THROW(InitialPath(1.0, 0.3, {1.0, 1.0, 1.0, 1.0}), ValidationError);
}

TEST(SegmentAt, AtZeroEqualsInitialPath) {
  const double dt = 1.0 / 64;
  SimulationConfig cfg;
  cfg.window = 1.0;
  cfg.gap = 0.25;
  cfg.dt = dt;
  const auto theta = linear_theta(dt);
  const auto path = simulate_gap_path(theta, FunctionalSpec::constant(0.1), FunctionalSpec::constant(0.2), cfg);
  const auto seg = segment_at(path, 0.0, 1.0);
  ASSERT_EQ(seg.size(), theta.values().size());
  for (std::size_t i = 0; i < seg.size(); ++i) EXPECT_EQ(seg.values[i], theta.values()[i]);
}

TEST(SegmentAt, ConstantPathGivesConstantSegment) {
  SimulationConfig cfg;
  cfg.dt = 1.0 / 64;
  cfg.noise = Noise::none;
  const auto theta = InitialPath::constant(cfg.window, cfg.dt, 42.0);
  const auto path = simulate_gap_path(theta, FunctionalSpec::constant(0.0), FunctionalSpec::constant(0.2), cfg);
  // zero drift, no noise: log-Euler still applies the -g^2/2 correction, so only the history is flat
  for (double t : {-0.25, 0.0}) {
    for (double v : segment_at(path, t, cfg.window).values) EXPECT_EQ(v, 42.0);
  }
}

TEST(SegmentAt, MatchesIndexArithmetic) {
  SimulationConfig cfg;
  cfg.dt = 0.05;
  cfg.gap = 0.25;
  cfg.window = 0.3;
  cfg.seed = 11;
  const auto theta = InitialPath::constant(cfg.window, cfg.dt, 100.0);
  const auto path = simulate_gap_path(theta, FunctionalSpec::affine_of(FunctionalSpec::moving_average(0.3), 0.001, 0.0),
                                      FunctionalSpec::constant(0.3), cfg);
  const auto seg = segment_at(path, 0.5, 0.3);
  // grid starts at -0.55, so t = 0.5 is node 21 and the segment spans nodes 15..21
  ASSERT_EQ(seg.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(seg.values[i], path.prices[15 + i]);
  EXPECT_THROW(segment_at(path, -0.4, 0.3), ValidationError);
}

TEST(ValueAt, NodesMidpointsAndEnd) {
  PathRecord p{TimeGrid(0.0, 0.5, 2), {2.0, 4.0, 7.0}, {}, Measure::physical, 0.5, 0.5};
  EXPECT_EQ(value_at(p, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(value_at(p, 0.25), 3.0);
  EXPECT_EQ(value_at(p, 1.0), 7.0);
  EXPECT_THROW(value_at(p, 1.5), ValidationError);
}

TEST(Csv, InitialPathResamplesLinearly) {
  std::istringstream in("offset,price\n-1,90\n-0.5,95\n0,100\n");
  const auto theta = load_initial_path_csv(in, 1.0, 0.25);
  const auto v = theta.values();
  ASSERT_EQ(v.size(), 5u);
  EXPECT_DOUBLE_EQ(v[1], 92.5);
  EXPECT_DOUBLE_EQ(v[4], 100.0);
}

TEST(Csv, RejectsBadInput) {
  std::istringstream no_header("-1,90\n0,100\n");
  EXPECT_THROW(load_initial_path_csv(no_header, 1.0, 0.25), ValidationError);
  std::istringstream short_cover("offset,price\n-0.5,95\n0,100\n");
  EXPECT_THROW(load_initial_path_csv(short_cover, 1.0, 0.25), ValidationError);
  std::istringstream negative("offset,price\n-1,-1\n0,100\n");
  EXPECT_THROW(load_initial_path_csv(negative, 1.0, 0.25), ValidationError);
}

TEST(Csv, PathRoundTrip) {
  std::istringstream in("t,price\n-0.5,100\n-0.25,101\n0,102\n0.25,99\n");
  const auto p = load_path_csv(in, 0.25, 0.25, 0.25);
  EXPECT_EQ(p.zero_index(), 2u);
  EXPECT_DOUBLE_EQ(p.horizon(), 0.25);
  EXPECT_EQ(p.prices[3], 99.0);
  std::istringstream uneven("t,price\n0,1\n0.3,1\n");
  EXPECT_THROW(load_path_csv(uneven, 0.25, 0.25, 0.25), ValidationError);
}
