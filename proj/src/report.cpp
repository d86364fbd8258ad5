#include "coopsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "coopsim/error.hpp"

namespace coopsim {

namespace {

std::string opt_fixed(const std::optional<double>& v) { return v ? format_fixed(*v) : ""; }

const char* vehicle_color(std::size_t index) {
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return kColors[index % (sizeof(kColors) / sizeof(kColors[0]))];
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + where);
  }
}

// Linear interpolation of speed at signed distance x over a trace that is
// non-decreasing in signed distance.
std::optional<double> speed_at(const std::vector<const TraceRow*>& rows, double x) {
  if (rows.empty() || x < rows.front()->signed_dist || x > rows.back()->signed_dist) return std::nullopt;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const TraceRow& a = *rows[i - 1];
    const TraceRow& b = *rows[i];
    if (x > b.signed_dist) continue;
    const double span = b.signed_dist - a.signed_dist;
    if (span <= 0.0) return std::min(a.speed, b.speed);
    return a.speed + (b.speed - a.speed) * (x - a.signed_dist) / span;
  }
  return rows.back()->speed;
}

}  // namespace

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string traces_csv(const ExperimentSummary& exp) {
  std::string out = "trial,vehicle,time_s,signed_dist_m,speed_mps,mode\n";
  for (const TrialMetrics& t : exp.trials) {
    for (const VehicleMetrics& vm : t.vehicles) {
      for (const TraceSample& s : vm.trace) {
        out += std::to_string(t.trial) + "," + std::to_string(vm.id) + "," + format_fixed(s.t) + "," +
               format_fixed(s.signed_dist) + "," + format_fixed(s.speed) + "," + to_string(s.mode) + "\n";
      }
    }
  }
  return out;
}

std::string trials_csv(const ExperimentSummary& exp) {
  std::string out =
      "trial,seed,vehicle,name,launch_s,passing_time_s,finished,first_pass,min_speed_near_zone_mps,"
      "brake_onset_dist_m,stop_dist_m,safety_violations\n";
  for (const TrialMetrics& t : exp.trials) {
    for (const VehicleMetrics& vm : t.vehicles) {
      out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + std::to_string(vm.id) + "," +
             vm.name + "," + format_fixed(vm.launch_time) + "," + opt_fixed(vm.passing_time) + "," +
             (vm.finished ? "1" : "0") + "," + (t.first_pass == vm.id ? "1" : "0") + "," +
             format_fixed(vm.min_speed_near_zone) + "," + opt_fixed(vm.brake_onset_dist) + "," +
             opt_fixed(vm.stop_dist) + "," + std::to_string(t.safety_violations) + "\n";
    }
  }
  return out;
}

std::string mode_log_csv(const ExperimentSummary& exp) {
  std::string out = "trial,time_s,vehicle,from,to\n";
  for (const TrialMetrics& t : exp.trials) {
    for (const ModeTransition& tr : t.mode_log) {
      out += std::to_string(t.trial) + "," + format_fixed(tr.time) + "," + std::to_string(tr.vehicle_id) +
             "," + to_string(tr.from) + "," + to_string(tr.to) + "\n";
    }
  }
  return out;
}

std::string summary_csv(std::span<const ExperimentSummary> exps) {
  std::string out = "scenario,vehicle,name,mean_passing_time_s,first_pass_count,finished,trials\n";
  for (const ExperimentSummary& e : exps) {
    const std::string mode = to_string(e.mode);
    const std::string n = std::to_string(e.trials.size());
    std::size_t finished = 0;
    for (const VehicleSummary& v : e.vehicles) {
      finished += v.finished;
      out += mode + "," + std::to_string(v.id) + "," + v.name + "," + format_fixed(v.mean_passing_time) + "," +
             std::to_string(v.first_pass_count) + "," + std::to_string(v.finished) + "," + n + "\n";
    }
    out += mode + ",all,overall," + format_fixed(e.overall_mean) + ",," + std::to_string(finished) + "," + n +
           "\n";
  }
  return out;
}

std::string summary_table(std::span<const ExperimentSummary> exps) {
  std::ostringstream out;
  char line[256];
  for (const ExperimentSummary& e : exps) {
    std::snprintf(line, sizeof(line), "scenario %s (%zu trials, seed %llu)\n", to_string(e.mode),
                  e.trials.size(), static_cast<unsigned long long>(e.master_seed));
    out << line;
    for (const VehicleSummary& v : e.vehicles) {
      std::snprintf(line, sizeof(line), "  %-10s passes first %2zu  mean passing time %8.3f s  finished %zu\n",
                    v.name.empty() ? std::to_string(v.id).c_str() : v.name.c_str(), v.first_pass_count,
                    v.mean_passing_time, v.finished);
      out << line;
    }
    std::snprintf(line, sizeof(line), "  %-10s %16s  mean passing time %8.3f s  unfinished trials %zu\n",
                  "overall", "", e.overall_mean, e.unfinished_trials);
    out << line;
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void write_experiment(const ExperimentSummary& exp, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const std::string mode = to_string(exp.mode);
  write_text_file(dir / ("traces_" + mode + ".csv"), traces_csv(exp));
  write_text_file(dir / ("trials_" + mode + ".csv"), trials_csv(exp));
  write_text_file(dir / ("mode_log_" + mode + ".csv"), mode_log_csv(exp));
}

std::vector<TraceRow> read_traces_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "trial,vehicle,time_s,signed_dist_m,speed_mps,mode") {
    throw ParseError("'" + path.string() + "' is not a trace CSV");
  }
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (cells.size() != 6) throw ParseError("expected 6 columns at " + where);
    TraceRow r;
    r.trial = static_cast<std::size_t>(parse_double(cells[0], where));
    r.vehicle = static_cast<VehicleId>(parse_double(cells[1], where));
    r.t = parse_double(cells[2], where);
    r.signed_dist = parse_double(cells[3], where);
    r.speed = parse_double(cells[4], where);
    r.mode = cells[5];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_speed_plot(const std::vector<TraceRow>& rows, const std::string& title,
                              const PlotOptions& opts) {
  constexpr double kW = 720, kH = 420, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - opts.x_min) / (opts.x_max - opts.x_min) * pw; };
  auto py = [&](double y) { return kTop + ph - std::clamp(y, 0.0, opts.y_max) / opts.y_max * ph; };
  auto num = [](double v) { return format_fixed(v, 2); };

  // vehicle -> trial -> samples, in file order
  std::map<VehicleId, std::map<std::size_t, std::vector<const TraceRow*>>> lines;
  for (const TraceRow& r : rows) lines[r.vehicle][r.trial].push_back(&r);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << title << "</text>\n";
  svg << "<g class=\"axes\" stroke=\"#888\" stroke-width=\"0.5\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double x = std::ceil(opts.x_min / 10.0) * 10.0; x <= opts.x_max + 1e-9; x += 10.0) {
    svg << "<line x1=\"" << num(px(x)) << "\" y1=\"" << kTop << "\" x2=\"" << num(px(x)) << "\" y2=\""
        << kTop + ph << "\"/><text x=\"" << num(px(x)) << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\" stroke=\"none\">" << format_fixed(x, 0) << "</text>\n";
  }
  for (double y = 0.0; y <= opts.y_max + 1e-9; y += 5.0) {
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(y)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
        << num(py(y)) << "\"/><text x=\"" << kLeft - 6 << "\" y=\"" << num(py(y) + 4)
        << "\" text-anchor=\"end\" stroke=\"none\">" << format_fixed(y, 0) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" stroke=\"none\">distance past intersection center [m]</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" stroke=\"none\" "
      << "transform=\"rotate(-90 16 " << kTop + ph / 2 << ")\">speed [m/s]</text>\n";
  svg << "</g>\n";

  std::size_t vi = 0;
  for (const auto& [vehicle, trials] : lines) {
    const char* color = vehicle_color(vi++);
    for (const auto& [trial, pts] : trials) {
      svg << "<polyline class=\"trial\" data-vehicle=\"" << vehicle << "\" data-trial=\"" << trial
          << "\" fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.3\" stroke-width=\"1\" points=\"";
      bool first = true;
      for (const TraceRow* r : pts) {
        if (r->signed_dist < opts.x_min || r->signed_dist > opts.x_max) continue;
        svg << (first ? "" : " ") << num(px(r->signed_dist)) << "," << num(py(r->speed));
        first = false;
      }
      svg << "\"/>\n";
    }

    svg << "<polyline class=\"mean\" data-vehicle=\"" << vehicle << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2.5\" points=\"";
    bool first = true;
    const auto steps = static_cast<long>(std::floor((opts.x_max - opts.x_min) / opts.grid_step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      const double x = opts.x_min + static_cast<double>(k) * opts.grid_step;
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& [trial, pts] : trials) {
        if (const auto v = speed_at(pts, x)) {
          sum += *v;
          ++n;
        }
      }
      if (n == 0) continue;
      svg << (first ? "" : " ") << num(px(x)) << "," << num(py(sum / static_cast<double>(n)));
      first = false;
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kLeft + pw - 4 << "\" y=\"" << kTop + 14 * static_cast<double>(vi)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
        << "\">vehicle " << vehicle << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::size_t plot_traces(const std::filesystem::path& traces_dir, const std::filesystem::path& out_dir,
                        std::span<const std::string> modes, const PlotOptions& opts) {
  if (modes.empty()) throw InvalidArgument("no scenarios selected for plotting");
  std::vector<std::pair<std::string, std::vector<TraceRow>>> loaded;
  for (const std::string& mode : modes) {
    const auto path = traces_dir / ("traces_" + mode + ".csv");
    if (!std::filesystem::exists(path)) throw IoError("missing trace file '" + path.string() + "'");
    loaded.emplace_back(mode, read_traces_csv(path));
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  for (const auto& [mode, rows] : loaded) {
    write_text_file(out_dir / ("speed_" + mode + ".svg"), render_speed_plot(rows, mode, opts));
  }
  return loaded.size();
}

}  // namespace coopsim
