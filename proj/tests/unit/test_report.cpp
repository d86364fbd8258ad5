#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "coopsim/error.hpp"
#include "coopsim/report.hpp"

using namespace coopsim;

namespace {

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

std::string points_of(const std::string& svg, const std::string& cls) {
  const std::regex re("<polyline class=\"" + cls + "\"[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  return std::regex_search(svg, m, re) ? m[1].str() : std::string();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("coopsim_report_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const ExperimentSummary& experiment(ScenarioMode mode) {
  static std::map<ScenarioMode, ExperimentSummary> cache;
  auto it = cache.find(mode);
  if (it == cache.end()) {
    ScenarioConfig c = default_scenario();
    c.mode = mode;
    it = cache.emplace(mode, run_experiment(c, 10, 42)).first;
  }
  return it->second;
}

}  // namespace

TEST(FormatFixed, RoundsAndDropsNegativeZero) {
  EXPECT_EQ(format_fixed(1.23456), "1.235");
  EXPECT_EQ(format_fixed(-0.0004), "0.000");
  EXPECT_EQ(format_fixed(-0.0006), "-0.001");
  EXPECT_EQ(format_fixed(2.0, 0), "2");
}

TEST(Csv, RowCountsMatchTheData) {
  const ExperimentSummary& e = experiment(ScenarioMode::kFuturePathWithRsu);
  std::size_t samples = 0;
  std::size_t transitions = 0;
  for (const TrialMetrics& t : e.trials) {
    transitions += t.mode_log.size();
    for (const VehicleMetrics& v : t.vehicles) samples += v.trace.size();
  }
  EXPECT_EQ(count_lines(traces_csv(e)), samples + 1);
  EXPECT_EQ(count_lines(trials_csv(e)), e.trials.size() * e.vehicles.size() + 1);
  EXPECT_EQ(count_lines(mode_log_csv(e)), transitions + 1);
  EXPECT_GT(transitions, 0u);
}

TEST(Csv, StandAloneModeLogIsHeaderOnly) {
  EXPECT_EQ(mode_log_csv(experiment(ScenarioMode::kStandAlone)), "trial,time_s,vehicle,from,to\n");
}

TEST(Csv, SummaryHasVehicleAndOverallRows) {
  const std::vector<ExperimentSummary> all{experiment(ScenarioMode::kStandAlone),
                                           experiment(ScenarioMode::kFuturePathOnly)};
  const std::string csv = summary_csv(all);
  EXPECT_EQ(count_lines(csv), 1 + 2 * 3u);
  EXPECT_NE(csv.find("stand_alone,all,overall," + format_fixed(all[0].overall_mean) + ",,20,10\n"),
            std::string::npos);
  const std::string table = summary_table(all);
  EXPECT_NE(table.find("scenario future_path_only (10 trials, seed 42)"), std::string::npos);
}

TEST(Csv, TracesRoundTripThroughReader) {
  const ExperimentSummary& e = experiment(ScenarioMode::kStandAlone);
  const auto dir = scratch_dir("roundtrip");
  write_experiment(e, dir);
  const std::vector<TraceRow> rows = read_traces_csv(dir / "traces_stand_alone.csv");
  std::size_t k = 0;
  for (const TrialMetrics& t : e.trials) {
    for (const VehicleMetrics& v : t.vehicles) {
      for (const TraceSample& s : v.trace) {
        ASSERT_LT(k, rows.size());
        EXPECT_EQ(rows[k].trial, t.trial);
        EXPECT_EQ(rows[k].vehicle, v.id);
        EXPECT_NEAR(rows[k].signed_dist, s.signed_dist, 0.0005 + 1e-12);
        EXPECT_NEAR(rows[k].speed, s.speed, 0.0005 + 1e-12);
        ++k;
      }
    }
  }
  EXPECT_EQ(k, rows.size());
}

TEST(Csv, ReaderRejectsOtherFiles) {
  const auto dir = scratch_dir("reject");
  write_text_file(dir / "bad.csv", "a,b\n1,2\n");
  EXPECT_THROW(read_traces_csv(dir / "bad.csv"), ParseError);
  EXPECT_THROW(read_traces_csv(dir / "missing.csv"), IoError);
}

TEST(Plot, TenTrialsGiveTwentyTrialLinesAndTwoMeans) {
  const auto dir = scratch_dir("plot");
  write_experiment(experiment(ScenarioMode::kStandAlone), dir);
  const std::vector<std::string> modes{"stand_alone"};
  EXPECT_EQ(plot_traces(dir, dir, modes), 1u);
  std::ifstream in(dir / "speed_stand_alone.svg");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string svg = ss.str();
  EXPECT_EQ(count_of(svg, "<polyline class=\"trial\""), 20u);
  EXPECT_EQ(count_of(svg, "stroke-opacity=\"0.3\""), 20u);
  EXPECT_EQ(count_of(svg, "<polyline class=\"mean\""), 2u);
}

TEST(Plot, SingleTrialMeanEqualsTrialLine) {
  // Samples on the mean-line grid so both polylines have the same vertices.
  std::vector<TraceRow> rows;
  for (int k = 0; k <= 200; ++k) {
    const double x = -60.0 + 0.5 * k;
    rows.push_back({0, 1, 0.1 * k, x, 8.0 + 3.0 * std::sin(x / 7.0), "auto"});
  }
  const std::string svg = render_speed_plot(rows, "single");
  EXPECT_FALSE(points_of(svg, "trial").empty());
  EXPECT_EQ(points_of(svg, "trial"), points_of(svg, "mean"));
}

TEST(Plot, DeterministicAndFailsOnMissingTraces) {
  const auto dir = scratch_dir("determinism");
  write_experiment(experiment(ScenarioMode::kFuturePathOnly), dir);
  const std::vector<TraceRow> rows = read_traces_csv(dir / "traces_future_path_only.csv");
  EXPECT_EQ(render_speed_plot(rows, "x"), render_speed_plot(rows, "x"));
  const std::vector<std::string> modes{"future_path_with_rsu"};
  EXPECT_THROW(plot_traces(dir, dir, modes), IoError);
}
