#include <gtest/gtest.h>

#include <random>

#include "coopsim/error.hpp"
#include "coopsim/reservation.hpp"
#include "oracles.hpp"

namespace coopsim {
namespace {

FuturePath straight(VehicleId id, Point2D from, Point2D dir, double speed, double t0, int n, double step = 1.0) {
  FuturePath fp;
  fp.vehicle_id = id;
  fp.current_pos = from;
  fp.current_speed = speed;
  for (int k = 0; k < n; ++k) {
    const double s = step * k;
    fp.points.push_back({{from.x + dir.x * s, from.y + dir.y * s}, t0 + s / speed});
  }
  return fp;
}

FuturePath single(VehicleId id, Point2D p, double t) {
  FuturePath fp;
  fp.vehicle_id = id;
  fp.current_pos = p;
  fp.points.push_back({p, t});
  return fp;
}

const CoordinationParams kParams{};

TEST(DetectConflict, IdenticalPathsConflictAtOrigin) {
  const FuturePath a = straight(1, {0, 0}, {1, 0}, 5.0, 0.0, 20);
  FuturePath b = a;
  b.vehicle_id = 2;
  const auto c = detect_conflict(a, b, kParams, 0.0);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->own_point_index, 0u);
  EXPECT_EQ(c->other_point_index, 0u);
  EXPECT_EQ(c->distance, 0.0);
  EXPECT_EQ(c->other_id, 2u);
}

TEST(DetectConflict, CrossingFourSecondsApartIsClear) {
  // Both reach the origin 5 m after their start; b starts 4 s later.
  const FuturePath a = straight(1, {-5, 0}, {1, 0}, 5.0, 0.0, 11, 0.5);
  const FuturePath b = straight(2, {0, -5}, {0, 1}, 5.0, 4.0, 11, 0.5);
  const auto oracle = oracle::brute_force_conflict(a, b, 2.8, 1.5, 5.0);
  EXPECT_FALSE(oracle);
  EXPECT_FALSE(detect_conflict(a, b, kParams, 0.0));
}

TEST(DetectConflict, BoundsAreInclusive) {
  const auto c = detect_conflict(single(1, {0, 0}, 1.0), single(2, {2.8, 0}, 1.0), kParams, 0.0);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->distance, 2.8);
  EXPECT_TRUE(detect_conflict(single(1, {0, 0}, 0.0), single(2, {0, 0}, 1.5), kParams, 0.0));
  EXPECT_TRUE(detect_conflict(single(1, {0, 0}, 5.0), single(2, {0, 0}, 6.0), kParams, 0.0));
  EXPECT_FALSE(detect_conflict(single(1, {0, 0}, 0.0), single(2, {2.81, 0}, 0.0), kParams, 0.0));
  EXPECT_FALSE(detect_conflict(single(1, {0, 0}, 0.0), single(2, {0, 0}, 1.51), kParams, 0.0));
  EXPECT_FALSE(detect_conflict(single(1, {0, 0}, 5.01), single(2, {0, 0}, 5.5), kParams, 0.0));
}

TEST(DetectConflict, EmptyPathsNeverConflict) {
  FuturePath empty;
  empty.vehicle_id = 2;
  EXPECT_FALSE(detect_conflict(straight(1, {0, 0}, {1, 0}, 1, 0, 5), empty, kParams, 0.0));
  EXPECT_FALSE(detect_conflict(empty, straight(1, {0, 0}, {1, 0}, 1, 0, 5), kParams, 0.0));
}

// Random pairs near each other, plus pairs built to sit on the thresholds.
std::pair<FuturePath, FuturePath> random_pair(std::mt19937_64& rng, int kind) {
  std::uniform_int_distribution<std::size_t> count(1, 60);
  std::uniform_real_distribution<double> t0(0.0, 4.0);
  auto make = [&](VehicleId id, Point2D origin) {
    Trajectory t = oracle::random_trajectory(rng, count(rng), 0.5, 15.0);
    const Point2D shift{origin.x - t.points[0].pos.x, origin.y - t.points[0].pos.y};
    for (auto& p : t.points) p.pos = {p.pos.x + shift.x, p.pos.y + shift.y};
    PathMeta meta;
    meta.vehicle_id = id;
    return to_future_path(t, 0, t0(rng), meta);
  };
  std::uniform_real_distribution<double> o(-15.0, 15.0);
  FuturePath a = make(1, {o(rng), o(rng)});
  FuturePath b = make(2, {o(rng), o(rng)});
  if (kind == 1) {
    // A point of b exactly d_margin from a point of a, with a time gap of
    // exactly tau.
    std::uniform_int_distribution<std::size_t> pick_a(0, a.points.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_b(0, b.points.size() - 1);
    const auto& p = a.points[pick_a(rng)];
    auto& q = b.points[pick_b(rng)];
    q.pos = {p.pos.x + 2.8, p.pos.y};
    q.t = p.t + 1.5;
  } else if (kind == 2) {
    b = a;
    b.vehicle_id = 2;
    for (auto& q : b.points) q.t += 1.5;
  }
  return {a, b};
}

TEST(DetectConflict, AgreesWithBruteForce) {
  std::mt19937_64 rng(2024);
  std::size_t conflicts = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [a, b] = random_pair(rng, trial % 3);
    const double now = 1.0;
    const auto got = detect_conflict(a, b, kParams, now);
    const auto want = oracle::brute_force_conflict(a, b, kParams.d_margin, kParams.tau_time, now + kParams.t_collision);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (!got) continue;
    ++conflicts;
    EXPECT_EQ(got->own_point_index, want->i) << "trial " << trial;
    EXPECT_EQ(got->other_point_index, want->j) << "trial " << trial;
    EXPECT_EQ(got->distance, want->distance);
  }
  EXPECT_GT(conflicts, 200u);
  EXPECT_LT(conflicts, 1000u);
}

TEST(DetectConflict, SymmetricInOutcome) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [a, b] = random_pair(rng, trial % 3);
    const auto ab = detect_conflict(a, b, kParams, 0.0);
    const auto ba = detect_conflict(b, a, kParams, 0.0);
    ASSERT_EQ(ab.has_value(), ba.has_value());
    if (ab) {
      EXPECT_EQ(ab->distance, ba->distance);
      EXPECT_EQ(ab->own_point_index, ba->other_point_index);
    }
  }
}

TEST(DetectConflict, MonotoneInThresholds) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [a, b] = random_pair(rng, trial % 3);
    const ConflictWindow base{2.8, 1.5, 5.0};
    if (!detect_conflict(a, b, base)) continue;
    EXPECT_TRUE(detect_conflict(a, b, ConflictWindow{4.0, 1.5, 5.0}));
    EXPECT_TRUE(detect_conflict(a, b, ConflictWindow{2.8, 3.0, 5.0}));
    EXPECT_TRUE(detect_conflict(a, b, ConflictWindow{2.8, 1.5, 9.0}));
  }
}

TEST(FirstConflictingPoint, LowestOwnIndexWithAnyPartner) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [a, b] = random_pair(rng, trial % 3);
    const ConflictWindow w{2.8, 1.5, 6.0};
    const auto got = first_conflicting_point(a, b, w);
    std::optional<std::size_t> lowest;
    for (std::size_t i = 0; i < a.points.size() && !lowest; ++i) {
      FuturePath one = a;
      one.points = {a.points[i]};
      if (oracle::brute_force_conflict(one, b, w.d_margin, w.tau_time, w.horizon_end)) lowest = i;
    }
    ASSERT_EQ(got.has_value(), lowest.has_value());
    if (got) EXPECT_EQ(got->own_point_index, *lowest);
    ASSERT_EQ(got.has_value(), detect_conflict(a, b, w).has_value());
  }
}

TEST(ReservationTable, UpsertReplacesAndEvictsStale) {
  ReservationTable table(1.0);
  table.upsert(single(1, {0, 0}, 0.0), 0.0);
  EXPECT_EQ(table.size(), 1u);
  table.upsert(single(1, {5, 0}, 0.5), 0.5);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table.find(1)->path.points[0].pos.x, 5.0);
  EXPECT_EQ(table.find(1)->last_update, 0.5);
  table.upsert(single(2, {9, 9}, 1.5), 1.5);
  EXPECT_FALSE(table.contains(1));
  EXPECT_TRUE(table.contains(2));
}

TEST(ReservationTable, DiscardIsIdempotent) {
  ReservationTable table;
  table.upsert(single(1, {0, 0}, 0.0), 0.0);
  table.discard(1);
  EXPECT_FALSE(table.contains(1));
  table.discard(1);
  table.discard(42);
  EXPECT_TRUE(table.empty());
}

TEST(TableCheck, ExcludesSelfAndOrdersByOtherId) {
  ReservationTable table;
  const FuturePath me = straight(5, {0, 0}, {1, 0}, 5.0, 0.0, 10);
  EXPECT_TRUE(table_check(table, me, kParams, 0.0).empty());
  table.upsert(me, 0.0);
  EXPECT_TRUE(table_check(table, me, kParams, 0.0).empty());
  FuturePath x = me;
  x.vehicle_id = 9;
  FuturePath y = me;
  y.vehicle_id = 3;
  table.upsert(x, 0.0);
  table.upsert(y, 0.0);
  const auto hits = table_check(table, me, kParams, 0.0);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].other_id, 3u);
  EXPECT_EQ(hits[1].other_id, 9u);
  table.discard(3);
  ASSERT_EQ(table_check(table, me, kParams, 0.0).size(), 1u);
}

TEST(AccelerationRoom, LoneApproachingVehicle) {
  const IntersectionGeometry g;
  const FuturePath fp = straight(1, {-40, 0}, {1, 0}, 8.0, 0.0, 60);
  EXPECT_TRUE(has_acceleration_room(ReservationTable{}, fp, g, kParams, 0.0));
}

TEST(AccelerationRoom, PathEndingInsideTheZoneHasNoRoom) {
  const IntersectionGeometry g;
  // Stops 3 m before the center, like a vehicle yielding inside the zone.
  EXPECT_FALSE(has_acceleration_room(ReservationTable{}, straight(1, {-40, 0}, {1, 0}, 8.0, 0.0, 38), g, kParams, 0.0));
  // Crossing beyond the horizon does not count either.
  EXPECT_FALSE(has_acceleration_room(ReservationTable{}, straight(1, {-40, 0}, {1, 0}, 4.0, 0.0, 60), g, kParams, 0.0));
}

TEST(AccelerationRoom, ConflictWithinTFreeBlocks) {
  const IntersectionGeometry g;
  const FuturePath fp = straight(1, {-40, 0}, {1, 0}, 5.0, 0.0, 60);
  ReservationTable table;
  // Another vehicle sits on the crossing 8 s from now, when fp is there too.
  table.upsert(single(2, {0, 0}, 8.0), 0.0);
  EXPECT_FALSE(detect_conflict(fp, table.find(2)->path, kParams, 0.0));
  EXPECT_TRUE(oracle::brute_force_conflict(fp, table.find(2)->path, 2.8, 1.5, 10.0));
  EXPECT_FALSE(has_acceleration_room(table, fp, g, kParams, 0.0));
}

TEST(AccelerationRoom, DepartingVehicleHasNoRoom) {
  const IntersectionGeometry g;
  const FuturePath fp = straight(1, {10, 0}, {1, 0}, 8.0, 0.0, 30);
  EXPECT_FALSE(has_acceleration_room(ReservationTable{}, fp, g, kParams, 0.0));
}

TEST(AccelerationRoom, FalseWheneverCollisionHorizonConflicts) {
  std::mt19937_64 rng(8);
  const IntersectionGeometry g;
  for (int trial = 0; trial < 300; ++trial) {
    const auto [a, b] = random_pair(rng, trial % 3);
    ReservationTable table;
    table.upsert(b, 0.0);
    if (!table_check(table, a, kParams, 0.0).empty()) {
      EXPECT_FALSE(has_acceleration_room(table, a, g, kParams, 0.0));
    }
  }
}

TEST(Params, Validation) {
  CoordinationParams p;
  EXPECT_NO_THROW(p.validate());
  p.t_free = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  IntersectionGeometry g;
  g.approach_radius = 5.0;
  EXPECT_THROW(g.validate(), InvalidArgument);
}

}  // namespace
}  // namespace coopsim
