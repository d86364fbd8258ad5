#include "coopsim/coordinator.hpp"

#include <algorithm>

#include "coopsim/error.hpp"

namespace coopsim {

Trajectory make_coordinated_path(const Trajectory& autonomous, CoordinationMode mode,
                                 const IntersectionGeometry& geometry, const CoordinationParams& params,
                                 double exit_margin) {
  Trajectory out = autonomous;
  switch (mode) {
    case CoordinationMode::kAuto:
      throw InvalidArgument("no coordinated path exists in Auto mode");
    case CoordinationMode::kCSlow:
      for (auto& p : out.points) p.speed = 0.0;
      return out;
    case CoordinationMode::kCFast: {
      const double exit_radius = geometry.zone_radius + exit_margin;
      std::optional<std::size_t> last_inside;
      for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (distance(out.points[i].pos, geometry.center) <= exit_radius) last_inside = i;
      }
      if (last_inside) {
        for (std::size_t i = 0; i <= *last_inside; ++i) out.points[i].speed = params.v_max;
      }
      return out;
    }
  }
  return out;
}

Coordinator::Coordinator(CoordinationParams params, IntersectionGeometry geometry,
                         CoordinatorOptions options)
    : params_(params), geometry_(geometry), options_(options), table_(options.stale_timeout) {
  params_.validate();
  geometry_.validate();
}

const VehicleSession* Coordinator::session(VehicleId id) const {
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : &it->second;
}

VehicleSession& Coordinator::session_for(VehicleId id, double now) {
  auto [it, inserted] = sessions_.try_emplace(id);
  if (inserted) {
    it->second.vehicle_id = id;
    it->second.last_seen = now;
  }
  return it->second;
}

void Coordinator::set_mode(VehicleSession& s, CoordinationMode to, double now) {
  if (s.mode == to) return;
  transitions_.push_back({now, s.vehicle_id, s.mode, to});
  s.mode = to;
  if (to != CoordinationMode::kAuto) s.last_autonomous = now;
}

void Coordinator::track_progress(VehicleSession& s, const std::vector<Point2D>& remaining) {
  if (remaining.empty()) return;
  const double exit_radius = geometry_.zone_radius + options_.exit_margin;
  const auto inside = [&](Point2D p) { return distance(p, geometry_.center) <= exit_radius; };
  if (inside(remaining.front())) {
    s.entered_zone = true;
  } else if (s.entered_zone && std::none_of(remaining.begin(), remaining.end(), inside)) {
    s.passed_intersection = true;
  }
}

Trajectory Coordinator::fast_path(const Trajectory& autonomous) const {
  return make_coordinated_path(autonomous, CoordinationMode::kCFast, geometry_, params_,
                               options_.exit_margin);
}

FuturePath Coordinator::prospective_fast_path(const FuturePath& fp) const {
  const Trajectory fast = limit_acceleration(fast_path(implied_trajectory(fp)), 0, fp.current_speed,
                                            options_.fast_accel);
  return to_future_path(fast, 0, fp.points.front().t,
                        {fp.vehicle_id, fp.current_pos, fp.current_speed, fp.shape});
}

std::vector<Message> Coordinator::step_mode(const FuturePath& fp, double now) {
  if (fp.points.empty()) return {};
  VehicleSession& s = session_for(fp.vehicle_id, now);
  s.last_seen = now;
  std::vector<Point2D> remaining{fp.current_pos};
  for (const FuturePathPoint& p : fp.points) remaining.push_back(p.pos);
  track_progress(s, remaining);

  switch (s.mode) {
    case CoordinationMode::kAuto: {
      if (!table_check(table_, fp, params_, now).empty()) {
        table_.discard(fp.vehicle_id);
        set_mode(s, CoordinationMode::kCSlow, now);
        return {InitiationMsg{fp.vehicle_id, CoordinationMode::kCSlow}};
      }
      if (!s.passed_intersection &&
          table_check(table_, fp, ConflictWindow::free_run(params_, now)).empty()) {
        FuturePath fast = prospective_fast_path(fp);
        if (has_acceleration_room(table_, fast, geometry_, params_, now)) {
          set_mode(s, CoordinationMode::kCFast, now);
          table_.upsert(std::move(fast), now);
          return {InitiationMsg{fp.vehicle_id, CoordinationMode::kCFast}};
        }
      }
      table_.upsert(fp, now);
      return {};
    }
    case CoordinationMode::kCSlow:
      // The slowing vehicle holds no reservation; its autonomous path is
      // what gets checked.
      return {};
    case CoordinationMode::kCFast:
      table_.upsert(fp, now);
      if (s.passed_intersection) {
        set_mode(s, CoordinationMode::kAuto, now);
        return {TerminationMsg{fp.vehicle_id}};
      }
      return {};
  }
  return {};
}

std::vector<Message> Coordinator::step_mode(VehicleId id, const Trajectory& autonomous, double t0,
                                            double now) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.mode == CoordinationMode::kAuto) {
    ++ignored_autonomous_;
    return {};
  }
  VehicleSession& s = it->second;
  s.last_seen = now;
  s.last_autonomous = now;
  s.last_autonomous_path = autonomous;
  if (autonomous.empty()) return {};
  std::vector<Point2D> remaining;
  for (const TrajectoryPoint& p : autonomous.points) remaining.push_back(p.pos);
  track_progress(s, remaining);

  const PathMeta meta{id, autonomous.points.front().pos, autonomous.points.front().speed, {}};
  const FuturePath fp = to_future_path(autonomous, 0, t0, meta);

  if (s.mode == CoordinationMode::kCFast) {
    if (s.passed_intersection) {
      set_mode(s, CoordinationMode::kAuto, now);
      return {TerminationMsg{id}};
    }
    return {CoordinatedPathMsg{id, fast_path(autonomous)}};
  }

  // C_slow: hold at zero until the autonomous path clears the table.
  if (!table_check(table_, fp, params_, now).empty()) {
    return {CoordinatedPathMsg{
        id, make_coordinated_path(autonomous, CoordinationMode::kCSlow, geometry_, params_)}};
  }
  if (!s.passed_intersection &&
      table_check(table_, fp, ConflictWindow::free_run(params_, now)).empty()) {
    Trajectory fast = fast_path(autonomous);
    FuturePath fast_fp =
        to_future_path(limit_acceleration(fast, 0, meta.current_speed, options_.fast_accel), 0, t0, meta);
    if (has_acceleration_room(table_, fast_fp, geometry_, params_, now)) {
      set_mode(s, CoordinationMode::kCFast, now);
      table_.upsert(std::move(fast_fp), now);
      return {InitiationMsg{id, CoordinationMode::kCFast}, CoordinatedPathMsg{id, std::move(fast)}};
    }
  }
  set_mode(s, CoordinationMode::kAuto, now);
  table_.upsert(fp, now);
  return {TerminationMsg{id}};
}

std::vector<Message> Coordinator::handle_message(const Message& msg, double now) {
  if (const auto* m = std::get_if<FuturePathMsg>(&msg)) return step_mode(m->path, now);
  if (const auto* m = std::get_if<AutonomousPathMsg>(&msg)) {
    return step_mode(m->vehicle_id, m->trajectory, m->t0, now);
  }
  return {};
}

std::vector<Message> Coordinator::tick(double now) {
  std::vector<Message> out;
  for (auto& [id, s] : sessions_) {
    if (s.mode != CoordinationMode::kAuto && now - s.last_autonomous > options_.silence_timeout) {
      set_mode(s, CoordinationMode::kAuto, now);
      out.emplace_back(TerminationMsg{id});
    }
  }
  table_.evict_stale(now);
  return out;
}

}  // namespace coopsim
