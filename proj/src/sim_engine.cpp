#include "coopsim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "coopsim/error.hpp"

namespace coopsim {

namespace {

constexpr double kBrakeDrop = 0.5;   // m/s below the running peak
constexpr double kStopSpeed = 1e-3;  // m/s

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// Per-vehicle bookkeeping the loop needs beyond the agent itself.
struct Tracker {
  double center_s = 0.0;
  long long launch_step = 0;
  double peak_speed = 0.0;
  bool done = false;
};

}  // namespace

double VehicleSpec::destination() const {
  if (destination_s) return *destination_s;
  return Route(route).length();
}

void ScenarioConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0 && dt <= 0.1, "dt must lie in (0, 0.1]");
  require(std::isfinite(horizon) && horizon > 0.0, "horizon must be positive");
  require(std::isfinite(launch_jitter_max) && launch_jitter_max >= 0.0, "launch_jitter_max must be >= 0");
  require(std::isfinite(launch_resolution) && launch_resolution > 0.0, "launch_resolution must be positive");
  require(std::isfinite(trace_period) && trace_period >= dt, "trace_period must be >= dt");
  require(std::isfinite(near_zone_radius) && near_zone_radius > 0.0, "near_zone_radius must be positive");
  geometry.validate();
  params.validate();
  limits.validate();
  perception.validate();
  agent.validate();
  channel.validate();
  require(coordinator.exit_margin >= 0.0, "coordinator.exit_margin must be >= 0");
  require(coordinator.silence_timeout > 0.0 && coordinator.stale_timeout > 0.0,
          "coordinator timeouts must be positive");
  require(coordinator.fast_accel > 0.0, "coordinator.fast_accel must be positive");
  require(!vehicles.empty(), "scenario needs at least one vehicle");

  std::set<VehicleId> ids;
  double longest = 0.0;
  for (const VehicleSpec& v : vehicles) {
    require(v.id != kRsuNode && v.id != kBroadcast, "vehicle id collides with a reserved node id");
    require(ids.insert(v.id).second, "duplicate vehicle id " + std::to_string(v.id));
    require(v.route.size() >= 2, "vehicle " + std::to_string(v.id) + " route needs two points");
    const Route r(v.route);
    const double dest = v.destination();
    require(v.start_s >= 0.0 && dest <= r.length() + 1e-9 && v.start_s < dest,
            "vehicle " + std::to_string(v.id) + " needs 0 <= start_s < destination_s <= route length");
    v.shape.validate();
    longest = std::max(longest, dest - v.start_s);
  }
  require(horizon + launch_jitter_max >= longest / (params.v_max / 2.0),
          "horizon too short to traverse the routes at v_max/2");
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  VehicleSpec a;
  a.id = 1;
  a.name = "Car A";
  a.route = {{-80.0, 0.0}, {80.0, 0.0}};
  a.destination_s = 160.0;
  VehicleSpec b;
  b.id = 2;
  b.name = "Car B";
  b.route = {{0.0, -95.0}, {0.0, 80.0}};
  b.destination_s = 175.0;
  cfg.vehicles = {a, b};
  return cfg;
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::size_t trial) {
  std::uint64_t state = master_seed;
  std::uint64_t out = 0;
  for (std::size_t i = 0; i <= trial; ++i) out = splitmix64(state);
  return out;
}

std::optional<double> passing_time(const std::vector<ArcSample>& trace, double destination_s) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].s < destination_s) continue;
    if (i == 0) return trace[0].t;
    const ArcSample& a = trace[i - 1];
    const ArcSample& b = trace[i];
    const double f = (destination_s - a.s) / (b.s - a.s);
    return a.t + f * (b.t - a.t);
  }
  return std::nullopt;
}

TrialMetrics run_trial(const ScenarioConfig& cfg, std::uint64_t trial_seed, std::size_t trial_index) {
  cfg.validate();
  std::mt19937_64 rng(trial_seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  const AgentContext ctx{cfg.mode, cfg.geometry, cfg.params, cfg.limits, cfg.perception, cfg.agent, cfg.dt};
  const std::size_t n = cfg.vehicles.size();

  TrialMetrics m;
  m.trial = trial_index;
  m.seed = trial_seed;
  std::vector<VehicleAgent> agents;
  std::vector<Tracker> track(n);
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VehicleSpec& spec = cfg.vehicles[i];
    auto route = std::make_shared<const Route>(Route(spec.route).slice(spec.start_s, spec.destination()));
    const double slots = std::floor(cfg.launch_jitter_max / cfg.launch_resolution + 1e-9);
    const double jitter = std::floor(uniform() * (slots + 1.0)) * cfg.launch_resolution;
    track[i].launch_step = static_cast<long long>(std::ceil(jitter / cfg.dt - 1e-9));
    track[i].center_s = route->project(cfg.geometry.center);
    const double launch = static_cast<double>(track[i].launch_step) * cfg.dt;

    VehicleState st;
    st.vehicle_id = spec.id;
    st.route = route;
    st.shape = spec.shape;
    agents.emplace_back(std::move(st), launch);

    VehicleMetrics vm;
    vm.id = spec.id;
    vm.name = spec.name;
    vm.launch_time = launch;
    vm.destination_s = route->length();
    vm.min_speed_near_zone = std::numeric_limits<double>::infinity();
    vm.trace.push_back({launch, -track[i].center_s, 0.0, 0.0, CoordinationMode::kAuto});
    m.vehicles.push_back(std::move(vm));
  }

  Channel channel(cfg.channel, rng());
  std::optional<Coordinator> rsu;
  if (cfg.mode == ScenarioMode::kFuturePathWithRsu) {
    rsu.emplace(cfg.params, cfg.geometry, cfg.coordinator);
    channel.register_node(kRsuNode);
  }
  if (cfg.mode != ScenarioMode::kStandAlone) {
    for (const VehicleSpec& spec : cfg.vehicles) channel.register_node(spec.id);
  }

  auto count = [&m](const Message& msg) {
    switch (message_type(msg)) {
      case MessageType::kFuturePath: ++m.messages.future_paths; break;
      case MessageType::kAutonomousPath: ++m.messages.autonomous_paths; break;
      case MessageType::kCoordinatedPath: ++m.messages.coordinated_paths; break;
      case MessageType::kInitiation: ++m.messages.initiations; break;
      case MessageType::kTermination: ++m.messages.terminations; break;
    }
  };
  auto rsu_send = [&](const std::vector<Message>& out, double now) {
    for (const Message& msg : out) {
      count(msg);
      channel.send(kRsuNode, message_vehicle(msg), msg, now);
    }
  };

  const auto steps = static_cast<long long>(std::llround(cfg.horizon / cfg.dt));
  const auto stride = std::max<long long>(1, std::llround(cfg.trace_period / cfg.dt));
  std::map<std::pair<std::size_t, std::size_t>, bool> in_violation;
  std::vector<VehicleState> world;
  world.reserve(n);

  for (long long k = 0; k < steps; ++k) {
    const double now = static_cast<double>(k) * cfg.dt;
    std::map<NodeId, std::vector<Message>> inbox;
    for (Envelope& env : channel.poll(now)) inbox[env.dst].push_back(std::move(env.payload));

    if (rsu) {
      for (const Message& msg : inbox[kRsuNode]) rsu_send(rsu->handle_message(msg, now), now);
      rsu_send(rsu->tick(now), now);
    }

    world.clear();
    for (const VehicleAgent& a : agents) world.push_back(a.state());

    const double t_next = now + cfg.dt;
    for (std::size_t i = 0; i < n; ++i) {
      VehicleAgent& agent = agents[i];
      Tracker& tr = track[i];
      if (tr.done) continue;
      const VehicleState before = agent.state();
      const std::vector<Message>& mine = inbox[before.vehicle_id];
      for (const OutboundMessage& o : agent.tick(mine, now, world, ctx)) {
        count(o.msg);
        channel.send(before.vehicle_id, o.dst, o.msg, now);
      }
      if (k < tr.launch_step) continue;

      const VehicleState& st = agent.state();
      VehicleMetrics& vm = m.vehicles[i];
      const double sd_before = before.s - tr.center_s;
      const double sd = st.s - tr.center_s;
      if (!vm.center_time && sd_before < 0.0 && sd >= 0.0) {
        vm.center_time = now + cfg.dt * (-sd_before) / (sd - sd_before);
      } else if (!vm.center_time && sd_before >= 0.0 && k == tr.launch_step) {
        vm.center_time = now;
      }
      if (std::abs(sd) <= cfg.near_zone_radius) vm.min_speed_near_zone = std::min(vm.min_speed_near_zone, st.v);
      if (sd < 0.0) {
        tr.peak_speed = std::max(tr.peak_speed, st.v);
        if (!vm.brake_onset_dist && st.v < tr.peak_speed - kBrakeDrop) vm.brake_onset_dist = -sd;
        if (!vm.stop_dist && st.v <= kStopSpeed && st.s > 0.0 && -sd <= cfg.near_zone_radius) {
          vm.stop_dist = -sd;
        }
      }

      const bool sample = (k + 1 - tr.launch_step) % stride == 0;
      if (agent.finished()) {
        tr.done = true;
        vm.finished = true;
        const double v = std::max(st.v, 1e-12);
        const auto arrival =
            passing_time({{now, before.s}, {t_next, before.s + v * cfg.dt}}, vm.destination_s);
        vm.arrival_time = arrival.value_or(t_next);
        vm.passing_time = *vm.arrival_time - vm.launch_time;
        vm.trace.push_back({t_next, sd, st.v, st.s, st.mode});
      } else if (sample) {
        vm.trace.push_back({t_next, sd, st.v, st.s, st.mode});
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (track[i].done || track[j].done) continue;
        const Point2D pi = agents[i].state().position();
        const Point2D pj = agents[j].state().position();
        const double r = cfg.geometry.zone_radius;
        const bool inside = distance(pi, cfg.geometry.center) <= r && distance(pj, cfg.geometry.center) <= r;
        bool& flagged = in_violation[{i, j}];
        if (!inside) {
          flagged = false;
          continue;
        }
        const double d = distance(pi, pj);
        m.min_zone_separation = std::min(m.min_zone_separation.value_or(d), d);
        if (d < cfg.params.d_margin && !flagged) ++m.safety_violations;
        flagged = d < cfg.params.d_margin;
      }
    }

    m.end_time = t_next;
    if (std::all_of(track.begin(), track.end(), [](const Tracker& t) { return t.done; })) break;
  }

  m.all_finished = true;
  for (VehicleMetrics& vm : m.vehicles) {
    if (!std::isfinite(vm.min_speed_near_zone)) vm.min_speed_near_zone = 0.0;
    m.all_finished = m.all_finished && vm.finished;
  }
  std::optional<double> best;
  for (const VehicleMetrics& vm : m.vehicles) {
    if (vm.center_time && (!best || *vm.center_time < *best)) {
      best = vm.center_time;
      m.first_pass = vm.id;
    }
  }
  if (rsu) m.mode_log = rsu->transitions();
  m.messages.dropped = channel.stats().dropped;
  return m;
}

ExperimentSummary run_experiment(const ScenarioConfig& cfg, std::size_t n_trials, std::uint64_t master_seed,
                                 unsigned jobs) {
  if (n_trials < 1) throw InvalidArgument("n_trials must be >= 1");
  cfg.validate();
  ExperimentSummary sum;
  sum.scenario = cfg.name;
  sum.mode = cfg.mode;
  sum.master_seed = master_seed;
  sum.trials.resize(n_trials);

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_trials)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = next++; i < n_trials; i = next++) {
        sum.trials[i] = run_trial(cfg, derive_trial_seed(master_seed, i), i);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const VehicleSpec& spec : cfg.vehicles) sum.vehicles.push_back({spec.id, spec.name, 0.0, 0, 0});
  double total = 0.0;
  std::size_t finished = 0;
  for (const TrialMetrics& t : sum.trials) {
    if (!t.all_finished) ++sum.unfinished_trials;
    for (std::size_t i = 0; i < t.vehicles.size(); ++i) {
      const VehicleMetrics& vm = t.vehicles[i];
      VehicleSummary& vs = sum.vehicles[i];
      if (t.first_pass == vm.id) ++vs.first_pass_count;
      if (vm.passing_time) {
        ++vs.finished;
        vs.mean_passing_time += *vm.passing_time;
        total += *vm.passing_time;
        ++finished;
      }
    }
  }
  for (VehicleSummary& vs : sum.vehicles) {
    if (vs.finished > 0) vs.mean_passing_time /= static_cast<double>(vs.finished);
  }
  sum.overall_mean = finished > 0 ? total / static_cast<double>(finished) : 0.0;
  return sum;
}

bool initiations_matched(const TrialMetrics& m) {
  std::map<VehicleId, int> open;
  for (const ModeTransition& tr : m.mode_log) {
    if (tr.from == CoordinationMode::kAuto && tr.to != CoordinationMode::kAuto) ++open[tr.vehicle_id];
    if (tr.from != CoordinationMode::kAuto && tr.to == CoordinationMode::kAuto) --open[tr.vehicle_id];
  }
  return std::all_of(open.begin(), open.end(), [](const auto& kv) { return kv.second == 0; });
}

bool single_slow_or_serial_fast(const TrialMetrics& m) {
  std::set<VehicleId> slowed;
  for (const ModeTransition& tr : m.mode_log) {
    if (tr.to == CoordinationMode::kCSlow) slowed.insert(tr.vehicle_id);
  }
  if (slowed.size() == 1) return true;
  if (!slowed.empty()) return false;

  // Every vehicle must receive a C_fast grant, each at its own instant, so
  // that later grants were issued against the earlier reservations.
  std::map<VehicleId, double> first_grant;
  for (const ModeTransition& tr : m.mode_log) {
    if (tr.to == CoordinationMode::kCFast) first_grant.emplace(tr.vehicle_id, tr.time);
  }
  if (first_grant.size() != m.vehicles.size()) return false;
  std::set<double> instants;
  for (const auto& [id, t] : first_grant) {
    if (!instants.insert(t).second) return false;
  }
  return true;
}

}  // namespace coopsim
