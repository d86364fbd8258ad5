#include <gtest/gtest.h>

#include <cmath>

#include "coopsim/error.hpp"
#include "coopsim/sim_engine.hpp"

namespace coopsim {
namespace {

constexpr ScenarioMode kModes[] = {ScenarioMode::kStandAlone, ScenarioMode::kFuturePathOnly,
                                   ScenarioMode::kFuturePathWithRsu};

ScenarioConfig with_mode(ScenarioMode mode) {
  ScenarioConfig c = default_scenario();
  c.mode = mode;
  return c;
}

// Closed-form time for a rest-to-rest trapezoid over distance d.
double trapezoid_time(double d, double v, double a, double b) {
  const double ramps = v * v / (2 * a) + v * v / (2 * b);
  if (ramps <= d) return v / a + v / b + (d - ramps) / v;
  const double peak = std::sqrt(2 * d * a * b / (a + b));
  return peak / a + peak / b;
}

TEST(PassingTime, InterpolatesBetweenSamples) {
  const auto t = passing_time({{9.96, 159.7}, {9.98, 159.9}, {10.00, 160.1}}, 160.0);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 9.99, 1e-12);
}

TEST(PassingTime, StartAtDestinationIsZero) {
  EXPECT_EQ(passing_time({{0.0, 160.0}, {0.02, 160.0}}, 160.0), 0.0);
}

TEST(PassingTime, NeverReached) {
  EXPECT_FALSE(passing_time({{0.0, 0.0}, {1.0, 10.0}}, 160.0));
  EXPECT_FALSE(passing_time({}, 160.0));
}

TEST(RunTrial, SingleVehicleMatchesTrapezoid) {
  for (ScenarioMode mode : kModes) {
    for (double dt : {0.02, 0.01}) {
      ScenarioConfig c = with_mode(mode);
      c.vehicles.resize(1);
      c.dt = dt;
      c.agent.cruise_speed = c.params.v_max;
      const TrialMetrics m = run_trial(c, 7);
      ASSERT_TRUE(m.all_finished);
      const VehicleMetrics& v = m.vehicles[0];
      const double want = trapezoid_time(160.0, c.params.v_max, c.limits.a_max, c.limits.b_max);
      EXPECT_NEAR(*v.passing_time, want, 2 * dt) << to_string(mode) << " dt=" << dt;
    }
  }
}

TEST(RunTrial, SingleVehicleShortRouteNeverReachesCruise) {
  ScenarioConfig c = with_mode(ScenarioMode::kStandAlone);
  c.vehicles.resize(1);
  c.vehicles[0].route = {{-15, 0}, {15, 0}};
  c.vehicles[0].destination_s = 30.0;
  c.agent.cruise_speed = c.params.v_max;
  const TrialMetrics m = run_trial(c, 1);
  const double want = trapezoid_time(30.0, c.params.v_max, c.limits.a_max, c.limits.b_max);
  EXPECT_NEAR(*m.vehicles[0].passing_time, want, 2 * c.dt);
}

TEST(RunTrial, BitwiseDeterministic) {
  for (ScenarioMode mode : kModes) {
    const ScenarioConfig c = with_mode(mode);
    EXPECT_EQ(run_trial(c, 99, 3), run_trial(c, 99, 3)) << to_string(mode);
  }
}

TEST(RunTrial, DifferentSeedsChangeLaunchTimes) {
  const ScenarioConfig c = with_mode(ScenarioMode::kStandAlone);
  EXPECT_NE(run_trial(c, 1).vehicles[0].launch_time, run_trial(c, 2).vehicles[0].launch_time);
}

TEST(RunTrial, KinematicContractsHoldEveryStep) {
  for (ScenarioMode mode : kModes) {
    ScenarioConfig c = with_mode(mode);
    c.trace_period = c.dt;
    const double dv_max = std::max(c.limits.a_max, c.limits.b_max) * c.dt + 1e-9;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TrialMetrics m = run_trial(c, seed);
      for (const VehicleMetrics& v : m.vehicles) {
        for (std::size_t k = 1; k < v.trace.size(); ++k) {
          const TraceSample& a = v.trace[k - 1];
          const TraceSample& b = v.trace[k];
          ASSERT_GE(b.speed, 0.0);
          ASSERT_GE(b.s, a.s);
          ASSERT_LE(std::fabs(b.speed - a.speed), dv_max) << to_string(mode) << " t=" << b.t;
        }
      }
    }
  }
}

TEST(RunTrial, TraceStartsAtLaunchAndEndsAtDestination) {
  const ScenarioConfig c = with_mode(ScenarioMode::kFuturePathOnly);
  const TrialMetrics m = run_trial(c, 5);
  for (const VehicleMetrics& v : m.vehicles) {
    ASSERT_FALSE(v.trace.empty());
    EXPECT_EQ(v.trace.front().t, v.launch_time);
    EXPECT_EQ(v.trace.front().speed, 0.0);
    EXPECT_NEAR(v.trace.back().s, v.destination_s, 1e-6);
    EXPECT_GT(*v.passing_time, 0.0);
    EXPECT_NEAR(*v.arrival_time - v.launch_time, *v.passing_time, 1e-12);
    EXPECT_LE(v.launch_time, c.launch_jitter_max + c.dt);
  }
}

TEST(RunTrial, UnfinishedVehicleIsFlagged) {
  ScenarioConfig c = with_mode(ScenarioMode::kStandAlone);
  c.vehicles.resize(1);
  c.limits.a_max = 0.05;
  c.horizon = 30.0;
  const TrialMetrics m = run_trial(c, 1);
  EXPECT_FALSE(m.all_finished);
  EXPECT_FALSE(m.vehicles[0].finished);
  EXPECT_FALSE(m.vehicles[0].passing_time);
  EXPECT_NEAR(m.end_time, 30.0, 1e-9);
  const ExperimentSummary e = run_experiment(c, 2, 1);
  EXPECT_EQ(e.unfinished_trials, 2u);
  EXPECT_EQ(e.vehicles[0].finished, 0u);
}

TEST(RunTrial, StandAloneCarBStopsForCarA) {
  const TrialMetrics m = run_trial(with_mode(ScenarioMode::kStandAlone), derive_trial_seed(42, 0));
  EXPECT_EQ(m.first_pass, 1u);
  EXPECT_EQ(m.vehicles[1].min_speed_near_zone, 0.0);
  EXPECT_TRUE(m.mode_log.empty());
  EXPECT_EQ(m.messages.future_paths, 0u);
}

TEST(RunTrial, RsuTrialUsesCoordination) {
  const TrialMetrics m = run_trial(with_mode(ScenarioMode::kFuturePathWithRsu), derive_trial_seed(42, 0));
  EXPECT_GT(m.messages.initiations, 0u);
  EXPECT_EQ(m.messages.initiations, m.messages.terminations);
  EXPECT_FALSE(m.mode_log.empty());
  EXPECT_TRUE(initiations_matched(m));
}

TEST(Experiment, LivenessAndSafetyInEveryScenario) {
  for (ScenarioMode mode : kModes) {
    const ExperimentSummary e = run_experiment(with_mode(mode), 10, 42);
    EXPECT_EQ(e.unfinished_trials, 0u) << to_string(mode);
    std::size_t firsts = 0;
    for (const VehicleSummary& v : e.vehicles) firsts += v.first_pass_count;
    EXPECT_EQ(firsts, 10u);
    for (const TrialMetrics& t : e.trials) {
      EXPECT_EQ(t.safety_violations, 0u);
      if (t.min_zone_separation) {
        EXPECT_GE(*t.min_zone_separation, with_mode(mode).params.d_margin);
      }
    }
  }
}

TEST(Experiment, ScenarioOrdering) {
  const double sa = run_experiment(with_mode(ScenarioMode::kStandAlone), 10, 42).overall_mean;
  const double fp = run_experiment(with_mode(ScenarioMode::kFuturePathOnly), 10, 42).overall_mean;
  const double rsu = run_experiment(with_mode(ScenarioMode::kFuturePathWithRsu), 10, 42).overall_mean;
  EXPECT_LT(rsu, sa);
  EXPECT_LE(sa, fp * 1.10);
}

TEST(Experiment, HalvingDtKeepsMeanPassingTimes) {
  for (ScenarioMode mode : kModes) {
    ScenarioConfig c = with_mode(mode);
    const ExperimentSummary coarse = run_experiment(c, 10, 42);
    c.dt /= 2;
    const ExperimentSummary fine = run_experiment(c, 10, 42);
    for (std::size_t i = 0; i < coarse.vehicles.size(); ++i) {
      const double a = coarse.vehicles[i].mean_passing_time;
      const double b = fine.vehicles[i].mean_passing_time;
      EXPECT_LT(std::fabs(a - b) / a, 0.02) << to_string(mode) << " vehicle " << i;
    }
  }
}

TEST(Experiment, SingleTrialSummaryEqualsTrial) {
  const ScenarioConfig c = with_mode(ScenarioMode::kFuturePathOnly);
  const ExperimentSummary e = run_experiment(c, 1, 42);
  const TrialMetrics t = run_trial(c, derive_trial_seed(42, 0), 0);
  ASSERT_EQ(e.trials.size(), 1u);
  EXPECT_EQ(e.trials[0], t);
  double total = 0.0;
  for (std::size_t i = 0; i < t.vehicles.size(); ++i) {
    EXPECT_EQ(e.vehicles[i].mean_passing_time, *t.vehicles[i].passing_time);
    EXPECT_EQ(e.vehicles[i].first_pass_count, t.first_pass == t.vehicles[i].id ? 1u : 0u);
    total += *t.vehicles[i].passing_time;
  }
  EXPECT_DOUBLE_EQ(e.overall_mean, total / 2);
}

TEST(Experiment, ParallelJobsMatchSerial) {
  const ScenarioConfig c = with_mode(ScenarioMode::kFuturePathWithRsu);
  const ExperimentSummary serial = run_experiment(c, 6, 42, 1);
  const ExperimentSummary parallel = run_experiment(c, 6, 42, 4);
  EXPECT_EQ(serial.trials, parallel.trials);
  EXPECT_EQ(serial.overall_mean, parallel.overall_mean);
}

TEST(Experiment, RejectsZeroTrials) {
  EXPECT_THROW(run_experiment(default_scenario(), 0, 42), InvalidArgument);
}

TEST(Seeds, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_trial_seed(42, 3), derive_trial_seed(42, 3));
  EXPECT_NE(derive_trial_seed(42, 0), derive_trial_seed(42, 1));
  EXPECT_NE(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
}

TEST(ScenarioConfig, Validation) {
  auto bad = [](auto edit) {
    ScenarioConfig c = default_scenario();
    edit(c);
    return c;
  };
  EXPECT_NO_THROW(default_scenario().validate());
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.dt = 0.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.dt = 0.2; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.horizon = 10.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.vehicles.clear(); }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.vehicles[1].id = 1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.vehicles[0].destination_s = 500.0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.vehicles[0].route.resize(1); }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](ScenarioConfig& c) { c.launch_jitter_max = -1.0; }).validate(), InvalidArgument);
}

TEST(ModeLogChecks, SerialFastAndSingleSlow) {
  TrialMetrics m;
  m.vehicles.resize(2);
  m.vehicles[0].id = 1;
  m.vehicles[1].id = 2;
  using M = CoordinationMode;
  m.mode_log = {{1.0, 1, M::kAuto, M::kCFast}, {1.1, 2, M::kAuto, M::kCFast}, {3.0, 1, M::kCFast, M::kAuto},
                {4.0, 2, M::kCFast, M::kAuto}};
  EXPECT_TRUE(single_slow_or_serial_fast(m));
  EXPECT_TRUE(initiations_matched(m));
  m.mode_log[1].time = 1.0;
  EXPECT_FALSE(single_slow_or_serial_fast(m));
  m.mode_log = {{1.0, 1, M::kAuto, M::kCFast}, {1.0, 2, M::kAuto, M::kCSlow}, {2.0, 2, M::kCSlow, M::kCFast}};
  EXPECT_TRUE(single_slow_or_serial_fast(m));
  EXPECT_FALSE(initiations_matched(m));
  m.mode_log.push_back({1.5, 1, M::kAuto, M::kCSlow});
  EXPECT_FALSE(single_slow_or_serial_fast(m));
  m.mode_log = {{1.0, 1, M::kAuto, M::kCFast}};
  EXPECT_FALSE(single_slow_or_serial_fast(m));
}

}  // namespace
}  // namespace coopsim
