#include "coopsim/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "coopsim/error.hpp"
#include "json.hpp"

namespace coopsim {

using nlohmann::json;

namespace {

json point_json(Point2D p) { return {{"x", p.x}, {"y", p.y}}; }

json to_json(const ScenarioConfig& c) {
  json vehicles = json::array();
  for (const VehicleSpec& v : c.vehicles) {
    json route = json::array();
    for (Point2D p : v.route) route.push_back(point_json(p));
    vehicles.push_back({{"id", v.id},
                        {"name", v.name},
                        {"route", route},
                        {"start_s", v.start_s},
                        {"destination_s", v.destination()},
                        {"shape", {{"length", v.shape.length}, {"width", v.shape.width}}}});
  }
  return {
      {"name", c.name},
      {"mode", to_string(c.mode)},
      {"dt", c.dt},
      {"horizon", c.horizon},
      {"launch_jitter_max", c.launch_jitter_max},
      {"launch_resolution", c.launch_resolution},
      {"trace_period", c.trace_period},
      {"near_zone_radius", c.near_zone_radius},
      {"master_seed", c.master_seed},
      {"geometry",
       {{"center", point_json(c.geometry.center)},
        {"zone_radius", c.geometry.zone_radius},
        {"approach_radius", c.geometry.approach_radius}}},
      {"params",
       {{"t_collision", c.params.t_collision},
        {"t_free", c.params.t_free},
        {"d_margin", c.params.d_margin},
        {"v_max", c.params.v_max},
        {"tau_time", c.params.tau_time}}},
      {"limits", {{"a_max", c.limits.a_max}, {"b_max", c.limits.b_max}}},
      {"perception", {{"r_vis", c.perception.r_vis}, {"d_detect", c.perception.d_detect}}},
      {"agent",
       {{"cruise_speed", c.agent.cruise_speed},
        {"path_spacing", c.agent.path_spacing},
        {"max_points", c.agent.max_points},
        {"d_stop", c.agent.d_stop},
        {"d_safe", c.agent.d_safe},
        {"obstacle_decel", c.agent.obstacle_decel},
        {"obstacle_tau", c.agent.obstacle_tau},
        {"deadlock_wait", c.agent.deadlock_wait},
        {"broadcast_period", c.agent.broadcast_period},
        {"coordinated_freshness", c.agent.coordinated_freshness},
        {"coordination_timeout", c.agent.coordination_timeout},
        {"foreign_path_timeout", c.agent.foreign_path_timeout}}},
      {"coordinator",
       {{"exit_margin", c.coordinator.exit_margin},
        {"silence_timeout", c.coordinator.silence_timeout},
        {"stale_timeout", c.coordinator.stale_timeout},
        {"fast_accel", c.coordinator.fast_accel}}},
      {"channel",
       {{"latency_mean", c.channel.latency_mean},
        {"latency_jitter", c.channel.latency_jitter},
        {"loss_probability", c.channel.loss_probability}}},
      {"vehicles", vehicles},
  };
}

// Every key in `given` must exist in `known`; vehicles are checked against
// the first template vehicle.
void check_keys(const json& given, const json& known, const std::string& path) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!known.contains(key)) throw InvalidArgument("unknown scenario field '" + here + "'");
    const json& ref = known.at(key);
    if (key == "vehicles" && path.empty()) {
      if (!value.is_array()) throw InvalidArgument("'vehicles' must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        check_keys(value[i], ref.at(0), here + "." + std::to_string(i));
      }
    } else if (value.is_object() && ref.is_object()) {
      check_keys(value, ref, here);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("scenario field '" + path + key + "' has the wrong type");
  }
}

Point2D read_point(const json& j, const std::string& path) {
  Point2D p;
  if (!j.is_object()) throw InvalidArgument("scenario field '" + path + "' must be an {x, y} object");
  read(j, "x", p.x, path + ".");
  read(j, "y", p.y, path + ".");
  return p;
}

ScenarioConfig from_json(const json& j) {
  ScenarioConfig c = default_scenario();
  check_keys(j, to_json(c), "");

  read(j, "name", c.name, "");
  if (j.contains("mode")) {
    std::string mode;
    read(j, "mode", mode, "");
    c.mode = scenario_mode_from_string(mode);
  }
  read(j, "dt", c.dt, "");
  read(j, "horizon", c.horizon, "");
  read(j, "launch_jitter_max", c.launch_jitter_max, "");
  read(j, "launch_resolution", c.launch_resolution, "");
  read(j, "trace_period", c.trace_period, "");
  read(j, "near_zone_radius", c.near_zone_radius, "");
  read(j, "master_seed", c.master_seed, "");
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    if (g.contains("center")) c.geometry.center = read_point(g.at("center"), "geometry.center");
    read(g, "zone_radius", c.geometry.zone_radius, "geometry.");
    read(g, "approach_radius", c.geometry.approach_radius, "geometry.");
  }
  if (j.contains("params")) {
    const json& p = j.at("params");
    read(p, "t_collision", c.params.t_collision, "params.");
    read(p, "t_free", c.params.t_free, "params.");
    read(p, "d_margin", c.params.d_margin, "params.");
    read(p, "v_max", c.params.v_max, "params.");
    read(p, "tau_time", c.params.tau_time, "params.");
  }
  if (j.contains("limits")) {
    read(j.at("limits"), "a_max", c.limits.a_max, "limits.");
    read(j.at("limits"), "b_max", c.limits.b_max, "limits.");
  }
  if (j.contains("perception")) {
    read(j.at("perception"), "r_vis", c.perception.r_vis, "perception.");
    read(j.at("perception"), "d_detect", c.perception.d_detect, "perception.");
  }
  if (j.contains("agent")) {
    const json& a = j.at("agent");
    read(a, "cruise_speed", c.agent.cruise_speed, "agent.");
    read(a, "path_spacing", c.agent.path_spacing, "agent.");
    read(a, "max_points", c.agent.max_points, "agent.");
    read(a, "d_stop", c.agent.d_stop, "agent.");
    read(a, "d_safe", c.agent.d_safe, "agent.");
    read(a, "obstacle_decel", c.agent.obstacle_decel, "agent.");
    read(a, "obstacle_tau", c.agent.obstacle_tau, "agent.");
    read(a, "deadlock_wait", c.agent.deadlock_wait, "agent.");
    read(a, "broadcast_period", c.agent.broadcast_period, "agent.");
    read(a, "coordinated_freshness", c.agent.coordinated_freshness, "agent.");
    read(a, "coordination_timeout", c.agent.coordination_timeout, "agent.");
    read(a, "foreign_path_timeout", c.agent.foreign_path_timeout, "agent.");
  }
  if (j.contains("coordinator")) {
    const json& o = j.at("coordinator");
    read(o, "exit_margin", c.coordinator.exit_margin, "coordinator.");
    read(o, "silence_timeout", c.coordinator.silence_timeout, "coordinator.");
    read(o, "stale_timeout", c.coordinator.stale_timeout, "coordinator.");
    read(o, "fast_accel", c.coordinator.fast_accel, "coordinator.");
  }
  if (j.contains("channel")) {
    const json& o = j.at("channel");
    read(o, "latency_mean", c.channel.latency_mean, "channel.");
    read(o, "latency_jitter", c.channel.latency_jitter, "channel.");
    read(o, "loss_probability", c.channel.loss_probability, "channel.");
  }
  if (j.contains("vehicles")) {
    c.vehicles.clear();
    const json& vs = j.at("vehicles");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string path = "vehicles." + std::to_string(i) + ".";
      const json& v = vs[i];
      if (!v.is_object()) throw InvalidArgument("scenario field 'vehicles." + std::to_string(i) + "' must be an object");
      VehicleSpec spec;
      spec.id = static_cast<VehicleId>(i + 1);
      read(v, "id", spec.id, path);
      read(v, "name", spec.name, path);
      read(v, "start_s", spec.start_s, path);
      if (v.contains("destination_s")) {
        double d = 0.0;
        read(v, "destination_s", d, path);
        spec.destination_s = d;
      }
      if (v.contains("route")) {
        if (!v.at("route").is_array()) throw InvalidArgument("scenario field '" + path + "route' must be an array");
        for (std::size_t k = 0; k < v.at("route").size(); ++k) {
          spec.route.push_back(read_point(v.at("route")[k], path + "route." + std::to_string(k)));
        }
      }
      if (v.contains("shape")) {
        read(v.at("shape"), "length", spec.shape.length, path + "shape.");
        read(v.at("shape"), "width", spec.shape.width, path + "shape.");
      }
      if (!spec.destination_s && spec.route.size() >= 2) spec.destination_s = spec.destination();
      c.vehicles.push_back(std::move(spec));
    }
  }
  c.validate();
  return c;
}

json parse(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ScenarioConfig scenario_from_json(std::string_view text) {
  const json j = parse(text, "scenario");
  if (!j.is_object()) throw InvalidArgument("scenario must be a JSON object");
  return from_json(j);
}

ScenarioConfig load_scenario(const std::string& path_or_name) {
  if (path_or_name == "default") return default_scenario();
  std::ifstream in(path_or_name, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file '" + path_or_name + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

void apply_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidArgument("override must look like key.path=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  std::string pointer;
  std::istringstream parts(key);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) throw InvalidArgument("override key '" + key + "' has an empty segment");
    pointer += "/" + part;
  }

  json j = to_json(cfg);
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception&) {
    throw InvalidArgument("override key '" + key + "' is not a valid path");
  }
  bool exists = false;
  try {
    exists = j.contains(ptr);
  } catch (const json::exception&) {
    exists = false;
  }
  if (!exists) throw InvalidArgument("override key '" + key + "' does not name a scenario field");

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  const json& old = j.at(ptr);
  const bool compatible = (old.is_number() && value.is_number()) || old.type() == value.type();
  if (!compatible) throw InvalidArgument("override value for '" + key + "' has the wrong type");
  j.at(ptr) = value;
  cfg = from_json(j);
}

}  // namespace coopsim
