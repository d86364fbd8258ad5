#include "coopsim/reservation.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "coopsim/error.hpp"

namespace coopsim {

void CoordinationParams::validate() const {
  if (!(t_collision > 0.0 && t_free > 0.0 && d_margin > 0.0 && v_max > 0.0 && tau_time > 0.0)) {
    throw InvalidArgument("coordination params must all be positive");
  }
  if (t_free < t_collision) throw InvalidArgument("t_free must be >= t_collision");
}

void IntersectionGeometry::validate() const {
  if (!is_finite(center)) throw InvalidArgument("intersection center must be finite");
  if (!(zone_radius > 0.0 && approach_radius > zone_radius)) {
    throw InvalidArgument("intersection radii must satisfy approach_radius > zone_radius > 0");
  }
}

namespace {

struct Box {
  double min_x, min_y, max_x, max_y;
};

Box bounds(const std::vector<FuturePathPoint>& pts) {
  Box b{pts[0].pos.x, pts[0].pos.y, pts[0].pos.x, pts[0].pos.y};
  for (const auto& p : pts) {
    b.min_x = std::min(b.min_x, p.pos.x);
    b.min_y = std::min(b.min_y, p.pos.y);
    b.max_x = std::max(b.max_x, p.pos.x);
    b.max_y = std::max(b.max_y, p.pos.y);
  }
  return b;
}

bool boxes_within(const Box& a, const Box& b, double margin) {
  return a.min_x - margin <= b.max_x && b.min_x - margin <= a.max_x &&
         a.min_y - margin <= b.max_y && b.min_y - margin <= a.max_y;
}

bool times_sorted(const std::vector<FuturePathPoint>& pts) {
  return std::is_sorted(pts.begin(), pts.end(),
                        [](const FuturePathPoint& l, const FuturePathPoint& r) { return l.t < r.t; });
}

using Key = std::tuple<double, double, double, std::size_t, std::size_t>;

}  // namespace

std::optional<ConflictInfo> detect_conflict(const FuturePath& a, const FuturePath& b,
                                            const ConflictWindow& w) {
  if (a.points.empty() || b.points.empty()) return std::nullopt;
  if (!boxes_within(bounds(a.points), bounds(b.points), w.d_margin)) return std::nullopt;

  std::optional<Key> best;
  ConflictInfo info;
  auto consider = [&](std::size_t i, std::size_t j) {
    const auto& p = a.points[i];
    const auto& q = b.points[j];
    const double lo = std::min(p.t, q.t);
    if (lo > w.horizon_end) return;
    const double gap = std::abs(p.t - q.t);
    if (gap > w.tau_time) return;
    const double d = distance(p.pos, q.pos);
    if (d > w.d_margin) return;
    const Key key{lo, std::max(p.t, q.t), d, i, j};
    if (!best || key < *best) {
      best = key;
      info = {b.vehicle_id, i, j, d, gap};
    }
  };

  if (times_sorted(a.points) && times_sorted(b.points)) {
    // Both sequences are time-ordered, so the partners of a.points[i] within
    // tau form a sliding window over b. The window is slightly wider than tau
    // so rounding never drops a boundary pair; consider() applies the exact test.
    const double slack = 1e-6;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      const double ti = a.points[i].t;
      if (std::min(ti, b.points[0].t) > w.horizon_end) break;
      while (lo < b.points.size() && b.points[lo].t < ti - w.tau_time - slack) ++lo;
      for (std::size_t j = lo; j < b.points.size() && b.points[j].t <= ti + w.tau_time + slack; ++j) {
        consider(i, j);
      }
    }
  } else {
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      for (std::size_t j = 0; j < b.points.size(); ++j) consider(i, j);
    }
  }
  if (!best) return std::nullopt;
  return info;
}

std::optional<ConflictInfo> first_conflicting_point(const FuturePath& a, const FuturePath& b,
                                                    const ConflictWindow& w) {
  if (a.points.empty() || b.points.empty()) return std::nullopt;
  if (!boxes_within(bounds(a.points), bounds(b.points), w.d_margin)) return std::nullopt;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const auto& p = a.points[i];
    std::optional<ConflictInfo> hit;
    double hit_d = 0.0;
    for (std::size_t j = 0; j < b.points.size(); ++j) {
      const auto& q = b.points[j];
      if (std::min(p.t, q.t) > w.horizon_end) continue;
      const double gap = std::abs(p.t - q.t);
      if (gap > w.tau_time) continue;
      const double d = distance(p.pos, q.pos);
      if (d > w.d_margin) continue;
      if (!hit || d < hit_d) {
        hit = ConflictInfo{b.vehicle_id, i, j, d, gap};
        hit_d = d;
      }
    }
    if (hit) return hit;
  }
  return std::nullopt;
}

void ReservationTable::upsert(FuturePath fp, double now) {
  const VehicleId id = fp.vehicle_id;
  entries_[id] = Entry{std::move(fp), now};
  evict_stale(now);
}

void ReservationTable::discard(VehicleId id) { entries_.erase(id); }

void ReservationTable::evict_stale(double now) {
  std::erase_if(entries_, [&](const auto& kv) { return now - kv.second.last_update >= stale_timeout_; });
}

const ReservationTable::Entry* ReservationTable::find(VehicleId id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<ConflictInfo> table_check(const ReservationTable& table, const FuturePath& fp,
                                      const ConflictWindow& window) {
  std::vector<ConflictInfo> out;
  for (const auto& [id, entry] : table.entries()) {
    if (id == fp.vehicle_id) continue;
    if (auto c = detect_conflict(fp, entry.path, window)) out.push_back(*c);
  }
  return out;
}

bool is_approaching(const FuturePath& fp, const IntersectionGeometry& geometry, double horizon_end) {
  const double d0 = distance(fp.current_pos, geometry.center);
  if (d0 <= geometry.zone_radius || d0 > geometry.approach_radius) return false;
  bool entered = false;
  for (const auto& p : fp.points) {
    if (p.t > horizon_end) break;
    const bool inside = distance(p.pos, geometry.center) <= geometry.zone_radius;
    if (entered && !inside) return true;
    entered = entered || inside;
  }
  return false;
}

bool has_acceleration_room(const ReservationTable& table, const FuturePath& fp,
                           const IntersectionGeometry& geometry, const CoordinationParams& params,
                           double now) {
  const auto window = ConflictWindow::free_run(params, now);
  if (!table_check(table, fp, window).empty()) return false;
  return is_approaching(fp, geometry, window.horizon_end);
}

}  // namespace coopsim
