#pragma once

// Fixed-step simulation of vehicles, channel and (optionally) the roadside
// unit, with per-trial metrics and multi-trial experiments.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopsim/coordinator.hpp"
#include "coopsim/netsim.hpp"
#include "coopsim/vehicle_agent.hpp"

namespace coopsim {

struct VehicleSpec {
  VehicleId id = 1;
  std::string name;
  std::vector<Point2D> route;
  double start_s = 0.0;
  std::optional<double> destination_s;  // defaults to the route end
  VehicleShape shape;
  friend bool operator==(const VehicleSpec&, const VehicleSpec&) = default;

  double destination() const;
};

struct ScenarioConfig {
  std::string name = "default";
  ScenarioMode mode = ScenarioMode::kStandAlone;
  IntersectionGeometry geometry;
  std::vector<VehicleSpec> vehicles;
  CoordinationParams params;
  ControlLimits limits;
  PerceptionConfig perception;
  AgentConfig agent;
  CoordinatorOptions coordinator;
  ChannelConfig channel;
  double dt = 0.02;
  double horizon = 120.0;
  double launch_jitter_max = 1.5;
  // Launch delays are drawn on this grid so that planning instants and
  // message arrivals do not move with dt when dt divides it.
  double launch_resolution = 0.02;
  double trace_period = 0.1;   // trace sampling interval
  double near_zone_radius = 30.0;  // window for min-speed and brake-onset metrics
  std::uint64_t master_seed = 42;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

// Two perpendicular roads crossing at the origin. Car A (id 1) runs west to
// east starting 80 m out; Car B (id 2) runs south to north starting 95 m out.
// Both end 80 m past the center.
ScenarioConfig default_scenario();

struct TraceSample {
  double t = 0.0;
  double signed_dist = 0.0;  // arc distance past the center (negative before it)
  double speed = 0.0;
  double s = 0.0;
  CoordinationMode mode = CoordinationMode::kAuto;
  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct VehicleMetrics {
  VehicleId id = 0;
  std::string name;
  double launch_time = 0.0;
  double destination_s = 0.0;
  bool finished = false;
  std::optional<double> arrival_time;   // absolute
  std::optional<double> passing_time;   // arrival - launch
  std::optional<double> center_time;    // absolute time the center was crossed
  double min_speed_near_zone = 0.0;
  // Distance before the center where the vehicle first slowed by more than
  // 0.5 m/s from its running peak; absent if it never did.
  std::optional<double> brake_onset_dist;
  // Distance before the center of the first full stop within the window.
  std::optional<double> stop_dist;
  std::vector<TraceSample> trace;
  friend bool operator==(const VehicleMetrics&, const VehicleMetrics&) = default;
};

struct MessageCounts {
  std::uint64_t future_paths = 0;
  std::uint64_t autonomous_paths = 0;
  std::uint64_t coordinated_paths = 0;
  std::uint64_t initiations = 0;
  std::uint64_t terminations = 0;
  std::uint64_t dropped = 0;
  friend bool operator==(const MessageCounts&, const MessageCounts&) = default;
};

struct TrialMetrics {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<VehicleMetrics> vehicles;
  std::optional<VehicleId> first_pass;
  std::vector<ModeTransition> mode_log;  // RSU-side transitions
  MessageCounts messages;
  std::size_t safety_violations = 0;
  std::optional<double> min_zone_separation;  // both vehicles inside the zone
  bool all_finished = false;
  double end_time = 0.0;
  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::size_t trial);

TrialMetrics run_trial(const ScenarioConfig& cfg, std::uint64_t trial_seed, std::size_t trial_index = 0);

struct VehicleSummary {
  VehicleId id = 0;
  std::string name;
  double mean_passing_time = 0.0;  // over finished trials
  std::size_t first_pass_count = 0;
  std::size_t finished = 0;
};

struct ExperimentSummary {
  std::string scenario;
  ScenarioMode mode = ScenarioMode::kStandAlone;
  std::uint64_t master_seed = 0;
  std::vector<TrialMetrics> trials;
  std::vector<VehicleSummary> vehicles;
  double overall_mean = 0.0;
  std::size_t unfinished_trials = 0;
};

// Trials run on up to `jobs` threads; results are joined in trial order.
ExperimentSummary run_experiment(const ScenarioConfig& cfg, std::size_t n_trials, std::uint64_t master_seed,
                                 unsigned jobs = 1);

struct ArcSample {
  double t = 0.0;
  double s = 0.0;
};

// First time s reaches destination_s, linearly interpolated between samples.
std::optional<double> passing_time(const std::vector<ArcSample>& trace, double destination_s);

// Mode-log checks for a coordinated trial.
bool initiations_matched(const TrialMetrics& m);
// Exactly one vehicle entered C_slow, or every vehicle received a C_fast
// grant and no two first grants share an instant.
bool single_slow_or_serial_fast(const TrialMetrics& m);

}  // namespace coopsim
