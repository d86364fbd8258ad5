#pragma once

// CSV exports, the text summary table and SVG speed plots.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coopsim/sim_engine.hpp"

namespace coopsim {

// Fixed 3-decimal rendering; values that round to zero print as 0.000.
std::string format_fixed(double v, int decimals = 3);

// trial,vehicle,time_s,signed_dist_m,speed_mps,mode
std::string traces_csv(const ExperimentSummary& exp);
// One row per trial and vehicle.
std::string trials_csv(const ExperimentSummary& exp);
// trial,time_s,vehicle,from,to
std::string mode_log_csv(const ExperimentSummary& exp);
// One row per scenario and vehicle plus an overall row per scenario.
std::string summary_csv(std::span<const ExperimentSummary> exps);
// Human-readable passing-time table.
std::string summary_table(std::span<const ExperimentSummary> exps);

void write_text_file(const std::filesystem::path& path, const std::string& content);
// traces_<mode>.csv, trials_<mode>.csv and mode_log_<mode>.csv in dir.
void write_experiment(const ExperimentSummary& exp, const std::filesystem::path& dir);

struct TraceRow {
  std::size_t trial = 0;
  VehicleId vehicle = 0;
  double t = 0.0;
  double signed_dist = 0.0;
  double speed = 0.0;
  std::string mode;
};

std::vector<TraceRow> read_traces_csv(const std::filesystem::path& path);

struct PlotOptions {
  double x_min = -60.0;
  double x_max = 40.0;
  double y_max = 15.0;
  double grid_step = 0.5;  // mean-line resampling step
};

// Speed over signed distance: one translucent polyline per trial and
// vehicle, one opaque mean polyline per vehicle.
std::string render_speed_plot(const std::vector<TraceRow>& rows, const std::string& title,
                              const PlotOptions& opts = {});

// Reads traces_<mode>.csv for each mode from traces_dir and writes
// speed_<mode>.svg to out_dir. Returns the number of files written; throws
// IoError when a trace file is missing.
std::size_t plot_traces(const std::filesystem::path& traces_dir, const std::filesystem::path& out_dir,
                        std::span<const std::string> modes, const PlotOptions& opts = {});

}  // namespace coopsim
