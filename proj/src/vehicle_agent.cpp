#include "coopsim/vehicle_agent.hpp"

#include <algorithm>
#include <cmath>

#include "coopsim/error.hpp"

namespace coopsim {

namespace {

constexpr double kEps = 1e-9;
constexpr double kHoldingSpeed = 3.0;

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

bool coordinated(CoordinationMode m) { return m != CoordinationMode::kAuto; }

// Last index whose arc position is <= rel (0 when rel is behind the start).
std::size_t index_at_or_before(const std::vector<double>& arcs, double rel) {
  const auto it = std::upper_bound(arcs.begin(), arcs.end(), rel + kEps);
  if (it == arcs.begin()) return 0;
  return static_cast<std::size_t>(it - arcs.begin()) - 1;
}

bool approaching_center(const VehicleState& st, const IntersectionGeometry& geometry) {
  return st.s < st.route->project(geometry.center);
}

// First point at or inside the stop line circle.
std::optional<std::size_t> stop_line_index(const Trajectory& traj, const IntersectionGeometry& geometry,
                                           double d_stop) {
  const double stop_r = geometry.zone_radius + d_stop;
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    if (distance(traj.points[i].pos, geometry.center) <= stop_r) return i;
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::kStandAlone:
      return "stand_alone";
    case ScenarioMode::kFuturePathOnly:
      return "future_path_only";
    case ScenarioMode::kFuturePathWithRsu:
      return "future_path_with_rsu";
  }
  return "?";
}

ScenarioMode scenario_mode_from_string(const std::string& s) {
  if (s == "stand_alone") return ScenarioMode::kStandAlone;
  if (s == "future_path_only") return ScenarioMode::kFuturePathOnly;
  if (s == "future_path_with_rsu") return ScenarioMode::kFuturePathWithRsu;
  throw InvalidArgument("unknown scenario mode: " + s);
}

void ControlLimits::validate() const {
  if (!positive(a_max) || !positive(b_max)) throw InvalidArgument("a_max and b_max must be positive");
}

void PerceptionConfig::validate() const {
  if (!positive(r_vis) || !positive(d_detect)) {
    throw InvalidArgument("r_vis and d_detect must be positive");
  }
}

void AgentConfig::validate() const {
  if (!positive(cruise_speed)) throw InvalidArgument("cruise_speed must be positive");
  if (!(path_spacing >= kMinPointSpacing) || !std::isfinite(path_spacing)) {
    throw InvalidArgument("path_spacing below minimum point spacing");
  }
  if (max_points < 1 || max_points > kMaxWirePoints) {
    throw InvalidArgument("max_points must lie in [1, 120]");
  }
  if (!(d_stop >= 0.0) || !(d_safe >= 0.0)) throw InvalidArgument("d_stop and d_safe must be >= 0");
  if (!positive(obstacle_decel)) throw InvalidArgument("obstacle_decel must be positive");
  if (!(obstacle_tau >= 0.0) || !std::isfinite(obstacle_tau)) throw InvalidArgument("obstacle_tau must be >= 0");
  if (!(deadlock_wait >= 0.0) || !std::isfinite(deadlock_wait)) throw InvalidArgument("deadlock_wait must be >= 0");
  if (!positive(broadcast_period) || !positive(coordinated_freshness) ||
      !positive(coordination_timeout) || !positive(foreign_path_timeout)) {
    throw InvalidArgument("agent periods and timeouts must be positive");
  }
}

Trajectory plan_route_trajectory(const VehicleState& state, double speed, double b_max, double spacing,
                                 std::size_t max_points) {
  if (!state.route || state.route->points().empty()) throw InvalidArgument("vehicle has no route");
  if (!(speed >= 0.0) || !positive(b_max)) throw InvalidArgument("invalid planning speed or b_max");
  if (max_points == 0) throw InvalidArgument("max_points must be positive");
  const double total = state.route->length();
  const double s0 = std::clamp(state.s, 0.0, total);

  Trajectory traj;
  if (total - s0 <= kEps) {
    traj.points.push_back({state.route->point_at(total), 0.0});
    return traj;
  }
  // Points sit on a fixed arc grid along the route so consecutive plans
  // share their points; the first point is the vehicle itself.
  std::vector<double> arcs{s0};
  for (double g = (std::floor(s0 / spacing + kEps) + 1.0) * spacing; arcs.size() < max_points; g += spacing) {
    if (g >= total - kMinPointSpacing) break;
    if (g - arcs.back() >= kMinPointSpacing) arcs.push_back(g);
  }
  if (arcs.size() < max_points) arcs.push_back(total);

  traj.points.reserve(arcs.size());
  for (double arc : arcs) {
    traj.points.push_back({state.route->point_at(arc), std::min(speed, std::sqrt(2.0 * b_max * (total - arc)))});
  }
  return traj;
}

Trajectory insert_stop(const Trajectory& traj, std::size_t stop_index, double decel) {
  if (!positive(decel)) throw InvalidArgument("insert_stop: decel must be positive");
  Trajectory out = traj;
  if (stop_index >= out.points.size()) return out;
  const std::vector<double> arcs = arc_lengths(out);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (i >= stop_index) {
      out.points[i].speed = 0.0;
    } else {
      const double d = arcs[stop_index] - arcs[i];
      out.points[i].speed = std::min(out.points[i].speed, std::sqrt(2.0 * decel * d));
    }
  }
  return out;
}

double naive_eta(const VehicleState& state, const IntersectionGeometry& geometry) {
  return distance(state.position(), geometry.center) / std::max(state.v, 1.0);
}

Trajectory apply_intersection_rule(const Trajectory& traj, const VehicleState& self,
                                   std::span<const VehicleState> perceived,
                                   const IntersectionGeometry& geometry, double d_stop, double decel) {
  if (traj.empty()) return traj;
  const double self_d = distance(self.position(), geometry.center);
  // Inside the zone the vehicle is committed and clears it.
  if (self_d <= geometry.zone_radius || !approaching_center(self, geometry)) return traj;

  const double self_eta = naive_eta(self, geometry);
  bool yield = false;
  for (const VehicleState& other : perceived) {
    if (other.vehicle_id == self.vehicle_id) continue;
    const double od = distance(other.position(), geometry.center);
    if (od <= geometry.zone_radius) {
      yield = true;
      break;
    }
    if (!approaching_center(other, geometry)) continue;
    const double eta = naive_eta(other, geometry);
    if (eta < self_eta || (eta == self_eta && other.vehicle_id < self.vehicle_id)) {
      yield = true;
      break;
    }
  }
  if (!yield) return traj;

  const auto stop = stop_line_index(traj, geometry, d_stop);
  if (!stop) return traj;  // path never reaches the stop line
  return insert_stop(traj, *stop, decel);
}

std::optional<ObstacleStop> find_future_obstacle(const Trajectory& traj, const FuturePath& own_fp,
                                                 std::span<const FuturePath> foreign,
                                                 const CoordinationParams& params, double now,
                                                 double d_safe) {
  if (traj.empty() || own_fp.points.empty()) return std::nullopt;
  const ConflictWindow window = ConflictWindow::collision(params, now);
  std::optional<ConflictInfo> best;
  for (const FuturePath& f : foreign) {
    if (f.vehicle_id == own_fp.vehicle_id) continue;
    const auto c = first_conflicting_point(own_fp, f, window);
    if (!c) continue;
    if (!best || c->own_point_index < best->own_point_index ||
        (c->own_point_index == best->own_point_index && c->other_id < best->other_id)) {
      best = c;
    }
  }
  if (!best) return std::nullopt;

  const std::size_t offset = nearest_point_index(traj, own_fp.points.front().pos);
  const std::vector<double> arcs = arc_lengths(traj);
  ObstacleStop out;
  out.conflict = *best;
  out.conflict_index = std::min(offset + best->own_point_index, traj.points.size() - 1);
  out.stop_index = index_at_or_before(arcs, arcs[out.conflict_index] - d_safe);
  return out;
}

Trajectory apply_future_obstacles(const Trajectory& traj, const FuturePath& own_fp,
                                  std::span<const FuturePath> foreign, const CoordinationParams& params,
                                  double now, double d_safe, double decel) {
  const auto stop = find_future_obstacle(traj, own_fp, foreign, params, now, d_safe);
  if (!stop) return traj;
  return insert_stop(traj, stop->stop_index, decel);
}

const Trajectory& select_active_plan(const VehicleState& state, const Trajectory& planned, double now,
                                     double freshness) {
  if (coordinated(state.mode) && state.active_coordinated_path &&
      now - state.coordinated_received_at < freshness) {
    return *state.active_coordinated_path;
  }
  return planned;
}

double target_speed(const VehicleState& state, const Trajectory& active, double lookahead) {
  if (active.empty()) return 0.0;
  const auto& pts = active.points;
  if (pts.size() == 1) return pts[0].speed;
  const Point2D pos = state.position();
  const std::size_t nearest = nearest_point_index(active, pos);

  // Project onto the segment after the nearest point, or the one before it
  // when the vehicle has not reached that point yet.
  std::size_t seg = std::min(nearest, pts.size() - 2);
  double along = 0.0;
  for (std::size_t cand : {seg, seg > 0 ? seg - 1 : seg}) {
    const Point2D a = pts[cand].pos;
    const Point2D b = pts[cand + 1].pos;
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    const double f = len2 > 0.0 ? ((pos.x - a.x) * (b.x - a.x) + (pos.y - a.y) * (b.y - a.y)) / len2 : 0.0;
    seg = cand;
    along = std::clamp(f, 0.0, 1.0) * std::sqrt(len2);
    if (f >= 0.0 || cand == 0) break;
  }

  // Walk `lookahead` metres further and interpolate v^2 linearly, which is
  // exact for constant-acceleration ramps.
  double remaining = along + std::max(0.0, lookahead);
  for (std::size_t i = seg; i + 1 < pts.size(); ++i) {
    const double len = distance(pts[i].pos, pts[i + 1].pos);
    if (remaining <= len) {
      if (len <= 0.0) return pts[i + 1].speed;
      const double f = remaining / len;
      const double v0 = pts[i].speed;
      const double v1 = pts[i + 1].speed;
      return std::sqrt((1.0 - f) * v0 * v0 + f * v1 * v1);
    }
    remaining -= len;
  }
  return pts.back().speed;
}

VehicleState control_step(const VehicleState& state, const Trajectory& active, const ControlLimits& limits,
                          double dt) {
  if (!positive(dt)) throw InvalidArgument("control_step: dt must be positive");
  VehicleState next = state;
  const double target = target_speed(state, active, state.v * dt);
  const double v = std::clamp(target, state.v - limits.b_max * dt, state.v + limits.a_max * dt);
  next.v = std::max(0.0, v);
  // Exact travel under the step's constant acceleration.
  next.s = std::min(state.s + 0.5 * (state.v + next.v) * dt, state.route->length());
  return next;
}

std::vector<VehicleState> perceive(const VehicleState& self, std::span<const VehicleState> others,
                                   const IntersectionGeometry& geometry, const PerceptionConfig& pcfg) {
  std::vector<VehicleState> out;
  const Point2D me = self.position();
  const bool self_visible = distance(me, geometry.center) <= pcfg.r_vis;
  for (const VehicleState& o : others) {
    if (o.vehicle_id == self.vehicle_id) continue;
    const Point2D p = o.position();
    const bool mutual = self_visible && distance(p, geometry.center) <= pcfg.r_vis;
    if (mutual || distance(me, p) <= pcfg.d_detect) out.push_back(o);
  }
  return out;
}

bool is_holding_short(const FuturePath& foreign, const FuturePath& own_fp, double hold_radius) {
  if (foreign.points.empty() || own_fp.points.empty()) return false;
  const FuturePathPoint& last = foreign.points.back();
  bool near = false;
  for (const FuturePathPoint& p : own_fp.points) {
    if (distance(p.pos, last.pos) <= hold_radius) {
      near = true;
      break;
    }
  }
  if (!near) return false;
  if (foreign.points.size() == 1) return true;
  const FuturePathPoint& prev = foreign.points[foreign.points.size() - 2];
  const double dt = last.t - prev.t;
  return dt > 0.0 && distance(prev.pos, last.pos) / dt < kHoldingSpeed;
}

VehicleAgent::VehicleAgent(VehicleState initial, double launch_time)
    : state_(std::move(initial)), launch_time_(launch_time), next_cycle_(launch_time) {
  if (!state_.route || state_.route->points().empty()) throw InvalidArgument("vehicle has no route");
  if (!(state_.s >= 0.0 && state_.s <= state_.route->length())) {
    throw InvalidArgument("vehicle start position outside route");
  }
  if (!(state_.v >= 0.0)) throw InvalidArgument("vehicle speed must be non-negative");
  state_.shape.validate();
  if (state_.s >= state_.route->length()) {
    finished_ = true;
    finish_time_ = launch_time;
  }
}

std::optional<VehicleId> VehicleAgent::yielding_to() const {
  if (!yield_) return std::nullopt;
  return yield_->other;
}

void VehicleAgent::handle_inbox(std::span<const Message> inbox, double now) {
  for (const Message& msg : inbox) {
    if (const auto* m = std::get_if<FuturePathMsg>(&msg)) {
      if (m->path.vehicle_id != state_.vehicle_id) foreign_[m->path.vehicle_id] = {m->path, now};
      continue;
    }
    if (message_vehicle(msg) != state_.vehicle_id) continue;
    if (const auto* m = std::get_if<InitiationMsg>(&msg)) {
      if (state_.mode != m->target_mode) {
        state_.mode = m->target_mode;
        state_.active_coordinated_path.reset();
      }
      last_rsu_contact_ = now;
      rsu_lost_ = false;
    } else if (const auto* m = std::get_if<CoordinatedPathMsg>(&msg)) {
      if (!coordinated(state_.mode)) continue;  // late path after a termination
      state_.active_coordinated_path = m->trajectory;
      state_.coordinated_received_at = now;
      last_rsu_contact_ = now;
    } else if (std::holds_alternative<TerminationMsg>(msg)) {
      state_.mode = CoordinationMode::kAuto;
      state_.active_coordinated_path.reset();
      last_rsu_contact_ = now;
      rsu_lost_ = false;
    }
  }
}

Trajectory VehicleAgent::plan_with_future_obstacles(const Trajectory& planned, double now,
                                                    const AgentContext& ctx) {
  const AgentConfig& cfg = ctx.config;
  std::vector<FuturePath> fresh;
  for (const auto& [id, f] : foreign_) {
    if (now - f.received <= cfg.foreign_path_timeout) fresh.push_back(f.path);
  }
  const PathMeta meta{state_.vehicle_id, state_.position(), state_.v, state_.shape};
  const FuturePath own_fp =
      to_future_path(limit_acceleration(planned, 0, state_.v, ctx.limits.a_max), 0, now, meta);

  if (distance(state_.position(), ctx.geometry.center) <= ctx.geometry.zone_radius) {
    yield_.reset();  // committed
    return planned;
  }

  CoordinationParams local = ctx.params;
  local.tau_time = cfg.obstacle_tau;
  const std::vector<double> arcs = arc_lengths(planned);
  if (const auto ob = find_future_obstacle(planned, own_fp, fresh, local, now, cfg.d_safe)) {
    yield_ = YieldHold{ob->conflict.other_id, state_.s + arcs[ob->stop_index], std::nullopt};
    return insert_stop(planned, ob->stop_index, cfg.obstacle_decel);
  }
  if (!yield_) return planned;

  // No conflict left. Keep holding while the other vehicle is itself holding
  // short of our path; when both have been stopped for deadlock_wait the
  // lower id proceeds.
  const auto it = foreign_.find(yield_->other);
  const double hold_radius = ctx.params.d_margin + cfg.d_safe + 2.0 * cfg.path_spacing;
  const bool holding = it != foreign_.end() && now - it->second.received <= cfg.foreign_path_timeout &&
                       is_holding_short(it->second.path, own_fp, hold_radius);
  if (!holding) {
    yield_.reset();
    return planned;
  }
  const bool both_stopped = state_.v <= 0.0 && it->second.path.points.size() == 1;
  if (!both_stopped) {
    yield_->stopped_since.reset();
  } else if (!yield_->stopped_since) {
    yield_->stopped_since = now;
  }
  if (state_.vehicle_id < yield_->other && yield_->stopped_since &&
      now - *yield_->stopped_since >= cfg.deadlock_wait - kEps) {
    yield_.reset();
    return planned;
  }
  return insert_stop(planned, index_at_or_before(arcs, yield_->stop_s - state_.s), cfg.obstacle_decel);
}

Trajectory VehicleAgent::plan_constraints(const Trajectory& planned, double now,
                                          std::span<const VehicleState> world, const AgentContext& ctx) {
  const AgentConfig& cfg = ctx.config;
  const bool fallback_rule = ctx.scenario == ScenarioMode::kFuturePathWithRsu && rsu_lost_ &&
                             state_.mode == CoordinationMode::kAuto;
  if (ctx.scenario == ScenarioMode::kStandAlone || fallback_rule) {
    const std::vector<VehicleState> seen = perceive(state_, world, ctx.geometry, ctx.perception);
    Trajectory constrained =
        apply_intersection_rule(planned, state_, seen, ctx.geometry, cfg.d_stop, ctx.limits.b_max);
    // A yield at the blind crossing ends with a full stop at the line.
    const bool inside = distance(state_.position(), ctx.geometry.center) <= ctx.geometry.zone_radius;
    if (constrained != planned) {
      stop_latched_ = true;
    } else if (stop_latched_ && (state_.v <= 0.0 || inside)) {
      stop_latched_ = false;
    } else if (stop_latched_) {
      const auto stop = stop_line_index(planned, ctx.geometry, cfg.d_stop);
      constrained = insert_stop(planned, stop.value_or(0), ctx.limits.b_max);
    }
    return constrained;
  }
  if (ctx.scenario == ScenarioMode::kFuturePathOnly && state_.mode == CoordinationMode::kAuto) {
    return plan_with_future_obstacles(planned, now, ctx);
  }
  return planned;
}

std::vector<OutboundMessage> VehicleAgent::tick(std::span<const Message> inbox, double now,
                                                std::span<const VehicleState> world,
                                                const AgentContext& ctx) {
  handle_inbox(inbox, now);
  std::vector<OutboundMessage> out;
  if (finished_ || !launched(now)) return out;

  const AgentConfig& cfg = ctx.config;
  if (coordinated(state_.mode) && now - last_rsu_contact_ > cfg.coordination_timeout) {
    state_.mode = CoordinationMode::kAuto;
    state_.active_coordinated_path.reset();
    rsu_lost_ = true;
  }

  // Planning runs at the planner cadence; the controller tracks the latest
  // plan every step.
  const bool cycle = now + kEps >= next_cycle_;
  if (cycle) {
    while (next_cycle_ <= now + kEps) next_cycle_ += cfg.broadcast_period;
    planned_ =
        plan_route_trajectory(state_, cfg.cruise_speed, ctx.limits.b_max, cfg.path_spacing, cfg.max_points);
    constrained_ = plan_constraints(planned_, now, world, ctx);
  }
  active_ = select_active_plan(state_, constrained_, now, cfg.coordinated_freshness);

  if (cycle && ctx.scenario != ScenarioMode::kStandAlone) {
    const PathMeta meta{state_.vehicle_id, state_.position(), state_.v, state_.shape};
    const std::size_t start = nearest_point_index(active_, meta.current_pos);
    const Trajectory reachable = limit_acceleration(active_, start, state_.v, ctx.limits.a_max);
    out.push_back({kBroadcast, FuturePathMsg{to_future_path(reachable, start, now, meta)}});
    if (ctx.scenario == ScenarioMode::kFuturePathWithRsu && coordinated(state_.mode)) {
      out.push_back({kRsuNode, AutonomousPathMsg{state_.vehicle_id, limit_acceleration(planned_, 0, state_.v, ctx.limits.a_max), now}});
    }
  }

  state_ = control_step(state_, active_, ctx.limits, ctx.dt);
  if (state_.s >= state_.route->length() - kEps) {
    finished_ = true;
    finish_time_ = now + ctx.dt;
  }
  return out;
}

}  // namespace coopsim
