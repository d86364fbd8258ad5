#pragma once

// The roadside unit's reservation table and the space-time conflict queries
// run against it.

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "coopsim/path_model.hpp"

namespace coopsim {

struct CoordinationParams {
  double t_collision = 5.0;     // conflict horizon [s]
  double t_free = 10.0;         // acceleration-room horizon [s]
  double d_margin = 2.8;        // spatial safety margin [m]
  double v_max = 50.0 / 3.6;    // road speed limit [m/s]
  double tau_time = 1.5;        // temporal tolerance for a conflict [s]

  friend bool operator==(const CoordinationParams&, const CoordinationParams&) = default;
  void validate() const;
};

struct IntersectionGeometry {
  Point2D center;
  double zone_radius = 7.0;
  double approach_radius = 50.0;

  friend bool operator==(const IntersectionGeometry&, const IntersectionGeometry&) = default;
  void validate() const;
};

struct ConflictInfo {
  VehicleId other_id = 0;
  std::size_t own_point_index = 0;
  std::size_t other_point_index = 0;
  double distance = 0.0;
  double time_gap = 0.0;
  friend bool operator==(const ConflictInfo&, const ConflictInfo&) = default;
};

// Thresholds for one conflict query. All bounds are inclusive.
struct ConflictWindow {
  double d_margin = 2.8;
  double tau_time = 1.5;
  double horizon_end = 0.0;  // absolute time; pairs need min(t_i, t_j) <= horizon_end

  static ConflictWindow collision(const CoordinationParams& p, double now) {
    return {p.d_margin, p.tau_time, now + p.t_collision};
  }
  static ConflictWindow free_run(const CoordinationParams& p, double now) {
    return {p.d_margin, p.tau_time, now + p.t_free};
  }
};

// Earliest conflicting point pair between two future paths, ordered by
// min(t_i, t_j), then max(t_i, t_j), distance, own index and other index.
// other_id is b's vehicle id.
std::optional<ConflictInfo> detect_conflict(const FuturePath& a, const FuturePath& b,
                                            const ConflictWindow& window);

inline std::optional<ConflictInfo> detect_conflict(const FuturePath& a, const FuturePath& b,
                                                   const CoordinationParams& params, double now) {
  return detect_conflict(a, b, ConflictWindow::collision(params, now));
}

// Conflict at the lowest index of `a` that has any partner in `b` under the
// same thresholds as detect_conflict; the closest partner is reported.
std::optional<ConflictInfo> first_conflicting_point(const FuturePath& a, const FuturePath& b,
                                                    const ConflictWindow& window);

class ReservationTable {
 public:
  struct Entry {
    FuturePath path;
    double last_update = 0.0;
  };

  explicit ReservationTable(double stale_timeout = 1.0) : stale_timeout_(stale_timeout) {}

  // Replaces the entry for fp.vehicle_id, stamps it with `now` and evicts
  // entries not refreshed for stale_timeout.
  void upsert(FuturePath fp, double now);
  // Idempotent.
  void discard(VehicleId id);
  void evict_stale(double now);

  const Entry* find(VehicleId id) const;
  bool contains(VehicleId id) const { return entries_.count(id) != 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<VehicleId, Entry>& entries() const { return entries_; }
  double stale_timeout() const { return stale_timeout_; }

 private:
  std::map<VehicleId, Entry> entries_;
  double stale_timeout_;
};

// Conflicts of fp against every entry except its own id, ordered by other id.
std::vector<ConflictInfo> table_check(const ReservationTable& table, const FuturePath& fp,
                                      const ConflictWindow& window);

inline std::vector<ConflictInfo> table_check(const ReservationTable& table, const FuturePath& fp,
                                             const CoordinationParams& params, double now) {
  return table_check(table, fp, ConflictWindow::collision(params, now));
}

// True when the current position is inside the approach ring
// (zone_radius, approach_radius] and the path crosses the conflict zone
// within the horizon: some point lies inside it and a later one outside.
bool is_approaching(const FuturePath& fp, const IntersectionGeometry& geometry, double horizon_end);

// No conflict over the t_free horizon and the vehicle is approaching.
bool has_acceleration_room(const ReservationTable& table, const FuturePath& fp,
                           const IntersectionGeometry& geometry, const CoordinationParams& params,
                           double now);

}  // namespace coopsim
