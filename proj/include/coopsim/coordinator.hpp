#pragma once

// Roadside unit logic: per-vehicle Auto / C_slow / C_fast sessions,
// coordinated path generation and message dispatch.

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "coopsim/netsim.hpp"
#include "coopsim/reservation.hpp"

namespace coopsim {

struct CoordinatorOptions {
  double exit_margin = 2.0;      // zone exit = zone_radius + exit_margin
  double silence_timeout = 1.0;  // no autonomous path for this long ends a coordinated mode
  double stale_timeout = 1.0;    // reservation table eviction
  double fast_accel = 2.0;       // acceleration assumed when predicting a C_fast path
  friend bool operator==(const CoordinatorOptions&, const CoordinatorOptions&) = default;
};

struct VehicleSession {
  VehicleId vehicle_id = 0;
  CoordinationMode mode = CoordinationMode::kAuto;
  std::optional<Trajectory> last_autonomous_path;
  double last_seen = 0.0;
  double last_autonomous = 0.0;  // last autonomous path, or mode entry
  bool entered_zone = false;
  bool passed_intersection = false;
};

// One mode change, recorded as it happens.
struct ModeTransition {
  double time = 0.0;
  VehicleId vehicle_id = 0;
  CoordinationMode from = CoordinationMode::kAuto;
  CoordinationMode to = CoordinationMode::kAuto;
  friend bool operator==(const ModeTransition&, const ModeTransition&) = default;
};

// Speed override along an autonomous path. C_slow zeroes every speed; C_fast
// sets v_max on every point up to the last one inside the zone exit circle
// and keeps the original speeds after it. Positions are never changed.
// Throws InvalidArgument for Auto.
Trajectory make_coordinated_path(const Trajectory& autonomous, CoordinationMode mode,
                                 const IntersectionGeometry& geometry, const CoordinationParams& params,
                                 double exit_margin = 2.0);

class Coordinator {
 public:
  Coordinator(CoordinationParams params, IntersectionGeometry geometry, CoordinatorOptions options = {});

  // Future path broadcast by a vehicle.
  std::vector<Message> step_mode(const FuturePath& fp, double now);
  // Autonomous path unicast by a vehicle in a coordinated mode.
  std::vector<Message> step_mode(VehicleId id, const Trajectory& autonomous, double t0, double now);

  // Dispatch on message type. Messages the RSU does not consume are ignored.
  std::vector<Message> handle_message(const Message& msg, double now);
  // Periodic housekeeping: silence fail-safe and table eviction.
  std::vector<Message> tick(double now);

  const ReservationTable& table() const { return table_; }
  const std::map<VehicleId, VehicleSession>& sessions() const { return sessions_; }
  const VehicleSession* session(VehicleId id) const;
  const CoordinationParams& params() const { return params_; }
  const IntersectionGeometry& geometry() const { return geometry_; }
  const std::vector<ModeTransition>& transitions() const { return transitions_; }
  // Number of autonomous path messages dropped because the session was in Auto.
  std::size_t ignored_autonomous() const { return ignored_autonomous_; }

 private:
  VehicleSession& session_for(VehicleId id, double now);
  void set_mode(VehicleSession& s, CoordinationMode to, double now);
  // A vehicle has passed once it has been inside the exit circle and no
  // point of its remaining path comes back inside.
  void track_progress(VehicleSession& s, const std::vector<Point2D>& remaining);
  // The path the vehicle would follow under a C_fast grant.
  FuturePath prospective_fast_path(const FuturePath& fp) const;
  Trajectory fast_path(const Trajectory& autonomous) const;

  CoordinationParams params_;
  IntersectionGeometry geometry_;
  CoordinatorOptions options_;
  ReservationTable table_;
  std::map<VehicleId, VehicleSession> sessions_;
  std::vector<ModeTransition> transitions_;
  std::size_t ignored_autonomous_ = 0;
};

}  // namespace coopsim
