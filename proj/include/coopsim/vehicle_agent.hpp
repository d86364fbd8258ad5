#pragma once

// Vehicle-side stack: route planning, the stand-alone right-of-way rule,
// future paths treated as obstacles, coordinated-path override, a
// longitudinal controller, occluded perception and message cadences.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "coopsim/coordinator.hpp"
#include "coopsim/netsim.hpp"
#include "coopsim/path_model.hpp"
#include "coopsim/reservation.hpp"

namespace coopsim {

enum class ScenarioMode { kStandAlone, kFuturePathOnly, kFuturePathWithRsu };

const char* to_string(ScenarioMode mode);
ScenarioMode scenario_mode_from_string(const std::string& s);

struct ControlLimits {
  double a_max = 2.0;
  double b_max = 3.0;  // braking, positive
  friend bool operator==(const ControlLimits&, const ControlLimits&) = default;
  void validate() const;
};

struct PerceptionConfig {
  double r_vis = 30.0;     // both vehicles inside this radius see each other
  double d_detect = 15.0;  // unconditional close-range detection
  friend bool operator==(const PerceptionConfig&, const PerceptionConfig&) = default;
  void validate() const;
};

struct AgentConfig {
  double cruise_speed = 30.0 / 3.6;  // speed of the vehicle's own plan
  double path_spacing = 1.0;
  std::size_t max_points = kMaxWirePoints;
  double d_stop = 5.0;          // stop line distance before the zone boundary
  double d_safe = 5.0;          // stop distance before a future-path conflict
  double obstacle_decel = 1.5;  // deceleration planned for future-path obstacles
  double obstacle_tau = 3.0;    // temporal tolerance when treating foreign paths as obstacles
  double deadlock_wait = 3.0;   // mutual stop before the lower id proceeds
  double broadcast_period = 0.1;
  double coordinated_freshness = 0.5;
  double coordination_timeout = 1.0;  // no RSU path for this long drops back to Auto
  double foreign_path_timeout = 1.0;
  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
  void validate() const;
};

struct VehicleState {
  VehicleId vehicle_id = 0;
  std::shared_ptr<const Route> route;  // ends at the destination
  double s = 0.0;                      // arc position along route
  double v = 0.0;
  CoordinationMode mode = CoordinationMode::kAuto;
  std::optional<Trajectory> active_coordinated_path;
  double coordinated_received_at = 0.0;
  VehicleShape shape;

  Point2D position() const { return route->point_at(s); }
  double route_length() const { return route->length(); }
};

// Route ahead of the vehicle sampled at the vehicle itself, then at the
// multiples of `spacing` along the route, then at the destination. Speed is
// `speed` except for a terminal ramp v = sqrt(2 * b_max * remaining).
Trajectory plan_route_trajectory(const VehicleState& state, double speed, double b_max,
                                 double spacing = 1.0, std::size_t max_points = kMaxWirePoints);

// Zero speed from stop_index on; earlier points capped by the braking curve
// sqrt(2 * decel * distance-to-stop).
Trajectory insert_stop(const Trajectory& traj, std::size_t stop_index, double decel);

// Naive estimated time to reach the intersection center.
double naive_eta(const VehicleState& state, const IntersectionGeometry& geometry);

// Stand-alone right-of-way: stop at the stop line when a perceived vehicle is
// inside the zone or would reach it first (ties: lower id proceeds).
Trajectory apply_intersection_rule(const Trajectory& traj, const VehicleState& self,
                                   std::span<const VehicleState> perceived,
                                   const IntersectionGeometry& geometry, double d_stop, double decel);

struct ObstacleStop {
  std::size_t stop_index = 0;   // index into the trajectory
  std::size_t conflict_index = 0;
  ConflictInfo conflict;
};

// First own-path point conflicting with any foreign future path over the
// t_collision horizon, and where to stop for it (d_safe before that point).
std::optional<ObstacleStop> find_future_obstacle(const Trajectory& traj, const FuturePath& own_fp,
                                                 std::span<const FuturePath> foreign,
                                                 const CoordinationParams& params, double now,
                                                 double d_safe);

Trajectory apply_future_obstacles(const Trajectory& traj, const FuturePath& own_fp,
                                  std::span<const FuturePath> foreign, const CoordinationParams& params,
                                  double now, double d_safe, double decel);

// Coordinated path while it is fresh and a coordinated mode is active,
// otherwise the vehicle's own plan.
const Trajectory& select_active_plan(const VehicleState& state, const Trajectory& planned, double now,
                                     double freshness);

// Plan speed `lookahead` metres past the vehicle's projection onto the plan,
// with v^2 interpolated linearly between points. control_step looks one
// step ahead so terminal braking ramps are tracked without overshoot.
double target_speed(const VehicleState& state, const Trajectory& active, double lookahead = 0.0);

VehicleState control_step(const VehicleState& state, const Trajectory& active,
                          const ControlLimits& limits, double dt);

std::vector<VehicleState> perceive(const VehicleState& self, std::span<const VehicleState> others,
                                   const IntersectionGeometry& geometry, const PerceptionConfig& pcfg);

// True when `foreign` ends at low speed next to our path: it is holding
// short of the crossing.
bool is_holding_short(const FuturePath& foreign, const FuturePath& own_fp, double hold_radius);

struct AgentContext {
  ScenarioMode scenario = ScenarioMode::kStandAlone;
  IntersectionGeometry geometry;
  CoordinationParams params;
  ControlLimits limits;
  PerceptionConfig perception;
  AgentConfig config;
  double dt = 0.02;
};

struct OutboundMessage {
  NodeId dst = kBroadcast;
  Message msg;
};

class VehicleAgent {
 public:
  VehicleAgent(VehicleState initial, double launch_time);

  // One simulation step: inbox handling, planning, cadence messages and one
  // control step. `world` holds every vehicle's state (including this one)
  // for perception.
  std::vector<OutboundMessage> tick(std::span<const Message> inbox, double now,
                                    std::span<const VehicleState> world, const AgentContext& ctx);

  const VehicleState& state() const { return state_; }
  double launch_time() const { return launch_time_; }
  bool launched(double now) const { return now + 1e-9 >= launch_time_; }
  bool finished() const { return finished_; }
  std::optional<double> finish_time() const { return finish_time_; }
  // Current trajectory the controller tracks.
  const Trajectory& active_plan() const { return active_; }
  std::optional<VehicleId> yielding_to() const;

 private:
  struct ForeignPath {
    FuturePath path;
    double received = 0.0;
  };
  struct YieldHold {
    VehicleId other = 0;
    double stop_s = 0.0;  // absolute arc position of the stop
    std::optional<double> stopped_since;  // both vehicles at rest since
  };

  void handle_inbox(std::span<const Message> inbox, double now);
  Trajectory plan_constraints(const Trajectory& planned, double now, std::span<const VehicleState> world,
                              const AgentContext& ctx);
  Trajectory plan_with_future_obstacles(const Trajectory& planned, double now, const AgentContext& ctx);

  VehicleState state_;
  double launch_time_;
  double next_cycle_;  // next planning and broadcast instant
  double last_rsu_contact_ = 0.0;
  bool rsu_lost_ = false;      // reverted by the local fail-safe
  bool stop_latched_ = false;  // yielding at the stop line until stopped
  bool finished_ = false;
  std::optional<double> finish_time_;
  std::map<VehicleId, ForeignPath> foreign_;
  std::optional<YieldHold> yield_;
  Trajectory planned_;
  Trajectory constrained_;
  Trajectory active_;
};

}  // namespace coopsim
