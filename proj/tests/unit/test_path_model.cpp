#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coopsim/error.hpp"
#include "coopsim/path_model.hpp"
#include "oracles.hpp"

namespace coopsim {
namespace {

Trajectory line(std::initializer_list<double> xs, double speed) {
  Trajectory t;
  for (double x : xs) t.points.push_back({{x, 0.0}, speed});
  return t;
}

std::vector<double> times(const FuturePath& fp) {
  std::vector<double> out;
  for (const auto& p : fp.points) out.push_back(p.t);
  return out;
}

TEST(NearestPointIndex, PicksClosest) {
  const Trajectory t = line({0, 1, 2}, 1.0);
  EXPECT_EQ(nearest_point_index(t, {1.1, 0.0}), 1u);
  EXPECT_EQ(nearest_point_index(t, {0.0, 0.0}), 0u);
}

TEST(NearestPointIndex, TieGoesToLowerIndex) {
  const Trajectory t = line({0, 1, 2}, 1.0);
  EXPECT_EQ(nearest_point_index(t, {0.5, 0.0}), 0u);
}

TEST(NearestPointIndex, EmptyTrajectoryThrows) {
  EXPECT_THROW(nearest_point_index(Trajectory{}, {0, 0}), InvalidArgument);
}

TEST(ToFuturePath, UnitSpeedGivesUnitTimes) {
  const FuturePath fp = to_future_path(line({0, 1, 2}, 1.0), 0, 0.0, {});
  EXPECT_EQ(times(fp), (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(ToFuturePath, SpeedOfArrivalPointGovernsSegment) {
  Trajectory t = line({0, 2, 4}, 0.0);
  t.points[1].speed = 2.0;
  t.points[2].speed = 4.0;
  const FuturePath fp = to_future_path(t, 0, 0.0, {});
  ASSERT_EQ(fp.points.size(), 3u);
  EXPECT_DOUBLE_EQ(fp.points[1].t, 1.0);
  EXPECT_DOUBLE_EQ(fp.points[2].t, 1.5);
}

TEST(ToFuturePath, StoppedSegmentTruncates) {
  Trajectory t = line({0, 1, 2}, 1.0);
  t.points[1].speed = 0.0;
  const FuturePath fp = to_future_path(t, 0, 3.0, {});
  ASSERT_EQ(fp.points.size(), 1u);
  EXPECT_EQ(fp.points[0].pos, (Point2D{0, 0}));
  EXPECT_EQ(fp.points[0].t, 3.0);
}

TEST(ToFuturePath, StartIndexAnchorsAtT0AndCopiesMeta) {
  PathMeta meta{7, {1.0, 2.0}, 3.5, {4.0, 2.0}};
  const FuturePath fp = to_future_path(line({0, 1, 2, 3}, 2.0), 2, 10.0, meta);
  EXPECT_EQ(fp.vehicle_id, 7u);
  EXPECT_EQ(fp.current_pos, (Point2D{1.0, 2.0}));
  EXPECT_EQ(fp.current_speed, 3.5);
  EXPECT_EQ(fp.shape, (VehicleShape{4.0, 2.0}));
  ASSERT_EQ(fp.points.size(), 2u);
  EXPECT_EQ(fp.points[0].pos.x, 2.0);
  EXPECT_EQ(fp.points[0].t, 10.0);
  EXPECT_DOUBLE_EQ(fp.points[1].t, 10.5);
}

TEST(ToFuturePath, MatchesCumulativeSumOracle) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> count(20, 120);
  for (int trial = 0; trial < 1000; ++trial) {
    const Trajectory t = oracle::random_trajectory(rng, count(rng), 0.1, 20.0);
    const FuturePath fp = to_future_path(t, 0, 5.0, {});
    const std::vector<double> expected = oracle::cumulative_times(t, 0, 5.0);
    ASSERT_EQ(fp.points.size(), expected.size());
    for (std::size_t n = 0; n < expected.size(); ++n) {
      ASSERT_NEAR(fp.points[n].t, expected[n], 1e-9);
      ASSERT_EQ(fp.points[n].pos, t.points[n].pos);
    }
  }
}

TEST(ToFuturePath, TimesStrictlyIncreaseForMovingTrajectories) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const FuturePath fp = to_future_path(oracle::random_trajectory(rng, 60, 0.5, 15.0), 0, 0.0, {});
    for (std::size_t n = 1; n < fp.points.size(); ++n) ASSERT_LT(fp.points[n - 1].t, fp.points[n].t);
  }
}

TEST(ToFuturePath, ImpliedSpeedsRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Trajectory t = oracle::random_trajectory(rng, 50, 0.5, 20.0);
    const FuturePath fp = to_future_path(t, 0, 0.0, {});
    for (std::size_t n = 1; n < fp.points.size(); ++n) {
      const double v = distance(fp.points[n].pos, fp.points[n - 1].pos) / (fp.points[n].t - fp.points[n - 1].t);
      ASSERT_NEAR(v / t.points[n].speed, 1.0, 1e-9);
    }
    const Trajectory back = implied_trajectory(fp);
    ASSERT_EQ(back.points.size(), fp.points.size());
    for (std::size_t n = 1; n < back.points.size(); ++n) {
      ASSERT_NEAR(back.points[n].speed / t.points[n].speed, 1.0, 1e-9);
    }
  }
}

FuturePath ramp_path(int n) {
  FuturePath fp;
  for (int k = 0; k <= n; ++k) fp.points.push_back({{double(k), 0.0}, double(k)});
  return fp;
}

TEST(TruncateHorizon, KeepsInclusivePrefix) {
  EXPECT_EQ(times(truncate_horizon(ramp_path(10), 0.0, 5.0)), (std::vector<double>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(times(truncate_horizon(ramp_path(10), 3.0, 0.0)), (std::vector<double>{0, 1, 2, 3}));
  EXPECT_TRUE(truncate_horizon(ramp_path(10), -5.0, 1.0).points.empty());
}

TEST(TruncateHorizon, AlwaysAPrefix) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> h(0.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    const FuturePath fp = to_future_path(oracle::random_trajectory(rng, 80, 0.5, 10.0), 0, 0.0, {});
    const FuturePath cut = truncate_horizon(fp, 0.0, h(rng));
    ASSERT_LE(cut.points.size(), fp.points.size());
    for (std::size_t n = 0; n < cut.points.size(); ++n) ASSERT_EQ(cut.points[n], fp.points[n]);
  }
}

TEST(ResamplePolyline, UniformSubdivision) {
  const std::vector<Point2D> route{{0, 0}, {1, 0}};
  const auto pts = resample_polyline(route, 0.25);
  ASSERT_EQ(pts.size(), 5u);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    EXPECT_NEAR(pts[k].x, 0.25 * double(k), 1e-12);
    EXPECT_EQ(pts[k].y, 0.0);
  }
}

TEST(ResamplePolyline, SpacingLongerThanRouteKeepsEndpoints) {
  const std::vector<Point2D> route{{0, 0}, {1, 0}};
  const auto pts = resample_polyline(route, 5.0);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts.front(), route.front());
  EXPECT_EQ(pts.back(), route.back());
}

TEST(ResamplePolyline, DegenerateRouteCollapses) {
  const std::vector<Point2D> route{{2, 3}, {2, 3}};
  EXPECT_EQ(resample_polyline(route, 1.0).size(), 1u);
}

TEST(ResamplePolyline, LShapeStaysOnPolylineWithBoundedGaps) {
  const std::vector<Point2D> route{{0, 0}, {10.3, 0}, {10.3, 7.9}};
  for (double spacing : {0.1, 0.7, 1.0, 2.5}) {
    const auto pts = resample_polyline(route, spacing);
    EXPECT_EQ(pts.front(), route.front());
    EXPECT_EQ(pts.back(), route.back());
    const Route r(route);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      EXPECT_NEAR(oracle::distance_to_polyline(pts[k], route), 0.0, 1e-9);
      if (k == 0) continue;
      const double gap = r.project(pts[k]) - r.project(pts[k - 1]);
      EXPECT_GE(gap, spacing - 1e-9);
      EXPECT_LT(gap, 2.0 * spacing);
    }
  }
}

TEST(Route, ArcLengthParametrisation) {
  const Route r({{0, 0}, {3, 0}, {3, 4}});
  EXPECT_DOUBLE_EQ(r.length(), 7.0);
  EXPECT_EQ(r.point_at(5.0), (Point2D{3, 2}));
  EXPECT_EQ(r.point_at(-1.0), (Point2D{0, 0}));
  EXPECT_EQ(r.point_at(100.0), (Point2D{3, 4}));
  EXPECT_DOUBLE_EQ(r.project({4, 1}), 4.0);
  const auto s = r.slice(1.0, 5.0);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.front(), (Point2D{1, 0}));
  EXPECT_EQ(s[1], (Point2D{3, 0}));
  EXPECT_EQ(s.back(), (Point2D{3, 2}));
}

TEST(LimitAcceleration, CapsAtReachableSpeed) {
  Trajectory t;
  for (int k = 0; k <= 40; ++k) t.points.push_back({{double(k), 0}, k == 30 ? 3.0 : 12.0});
  const Trajectory out = limit_acceleration(t, 2, 4.0, 2.0);
  for (int k = 0; k <= 1; ++k) EXPECT_EQ(out.points[k].speed, 12.0);
  // From 4 m/s at x = 2: v(x)^2 = 16 + 4 (x - 2) until the 3 m/s point at x = 30.
  for (int k = 2; k < 30; ++k) EXPECT_NEAR(out.points[k].speed, std::min(12.0, std::sqrt(16.0 + 4.0 * (k - 2))), 1e-12);
  EXPECT_EQ(out.points[30].speed, 3.0);
  for (int k = 31; k <= 40; ++k) EXPECT_NEAR(out.points[k].speed, std::min(12.0, std::sqrt(9.0 + 4.0 * (k - 30))), 1e-12);
  EXPECT_EQ(limit_acceleration(t, 41, 0.0, 2.0), t);
  EXPECT_THROW(limit_acceleration(t, 0, -1.0, 2.0), InvalidArgument);
  EXPECT_THROW(limit_acceleration(t, 0, 1.0, 0.0), InvalidArgument);
}

TEST(ArcLengths, Cumulative) {
  const auto a = arc_lengths(line({0, 1, 3}, 1.0));
  EXPECT_EQ(a, (std::vector<double>{0, 1, 3}));
}

}  // namespace
}  // namespace coopsim
