// coopsim command-line tool. Talks to the simulator only through the C API.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coopsim/coopsim.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnfinished = 2;

const std::vector<std::string> kAllModes = {"stand_alone", "future_path_only", "future_path_with_rsu"};

struct Failure {
  std::string message;
};

void check(coopsim_status status, const std::string& context) {
  if (status != COOPSIM_OK) throw Failure{context + ": " + coopsim_last_error()};
}

struct Scenario {
  coopsim_scenario* h = nullptr;
  Scenario() = default;
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;
  ~Scenario() { coopsim_scenario_free(h); }
};

struct Experiment {
  coopsim_experiment* h = nullptr;
  explicit Experiment(coopsim_experiment* p) : h(p) {}
  Experiment(Experiment&& o) noexcept : h(o.h) { o.h = nullptr; }
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;
  ~Experiment() { coopsim_experiment_free(h); }
};

struct OwnedString {
  char* s = nullptr;
  OwnedString() = default;
  OwnedString(const OwnedString&) = delete;
  OwnedString& operator=(const OwnedString&) = delete;
  ~OwnedString() { coopsim_string_free(s); }
};

struct RunOptions {
  std::string scenario = "default";
  std::size_t trials = 10;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  std::vector<std::string> overrides;
  std::vector<std::string> modes;
  unsigned jobs = 1;
};

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE || text[0] == '-') {
    throw Failure{origin + " is not an unsigned integer: '" + text + "'"};
  }
  return v;
}

std::uint64_t resolve_seed(const RunOptions& opts, const Scenario& sc) {
  if (opts.seed) return *opts.seed;
  if (const char* env = std::getenv("COOPSIM_SEED"); env && *env) return parse_seed(env, "COOPSIM_SEED");
  std::uint64_t seed = 0;
  check(coopsim_scenario_master_seed(sc.h, &seed), "scenario");
  return seed;
}

// Runs each mode (the scenario's own when none are given), writes CSVs and
// the summary, prints the table.
int run_modes(const RunOptions& opts, const std::vector<std::string>& modes) {
  Scenario sc;
  check(coopsim_scenario_load(opts.scenario.c_str(), &sc.h), "loading scenario '" + opts.scenario + "'");
  for (const std::string& o : opts.overrides) {
    check(coopsim_scenario_override(sc.h, o.c_str()), "override '" + o + "'");
  }
  const std::uint64_t seed = resolve_seed(opts, sc);

  std::error_code ec;
  std::filesystem::create_directories(opts.out, ec);
  if (ec) throw Failure{"cannot create output directory '" + opts.out + "': " + ec.message()};

  std::vector<std::string> selected = modes;
  if (selected.empty()) {
    const char* own = nullptr;
    check(coopsim_scenario_mode(sc.h, &own), "scenario");
    selected.emplace_back(own);
  }

  std::vector<Experiment> exps;
  std::size_t unfinished = 0;
  for (const std::string& mode : selected) {
    check(coopsim_scenario_set_mode(sc.h, mode.c_str()), "mode");
    coopsim_experiment* raw = nullptr;
    check(coopsim_experiment_run(sc.h, opts.trials, seed, opts.jobs, &raw), "running " + mode);
    exps.emplace_back(raw);
    check(coopsim_experiment_write(raw, opts.out.c_str()), "writing " + mode + " results");
    coopsim_experiment_info info{};
    check(coopsim_experiment_info_get(raw, &info), mode);
    unfinished += info.unfinished_trials;
  }

  std::vector<const coopsim_experiment*> handles;
  for (const Experiment& e : exps) handles.push_back(e.h);
  const std::string csv_path = (std::filesystem::path(opts.out) / "summary.csv").string();
  OwnedString table;
  check(coopsim_summary(handles.data(), handles.size(), csv_path.c_str(), &table.s), "summary");
  std::cout << table.s;
  const std::filesystem::path table_path = std::filesystem::path(opts.out) / "summary.txt";
  std::ofstream table_file(table_path, std::ios::binary);
  table_file << table.s;
  if (!table_file) throw Failure{"cannot write '" + table_path.string() + "'"};

  if (unfinished > 0) {
    std::cerr << "coopsim: " << unfinished << " trial(s) did not finish within the horizon\n";
    return kExitUnfinished;
  }
  return kExitOk;
}

void add_run_options(CLI::App* cmd, RunOptions& opts, std::string& seed_text) {
  cmd->add_option("--scenario", opts.scenario, "Scenario file, or 'default' for the built-in one")
      ->capture_default_str();
  cmd->add_option("--trials", opts.trials, "Trials per scenario mode")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", seed_text, "Master seed (falls back to COOPSIM_SEED, then the scenario)");
  cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
  cmd->add_option("--override", opts.overrides, "Scenario override key.path=value (repeatable)");
  cmd->add_option("--jobs", opts.jobs, "Worker threads for independent trials")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
}

struct BandwidthOptions {
  std::optional<std::size_t> points;
  std::size_t packet_bytes = 1460;
  double rate = 10.0;
  unsigned streams = 3;
  double media = 6.0e6;
  std::string format = "text";
};

int cmd_bandwidth(const BandwidthOptions& opts) {
  std::size_t packet = opts.packet_bytes;
  if (opts.points) check(coopsim_future_path_wire_bytes(*opts.points, &packet), "packet size");
  coopsim_bandwidth r{};
  check(coopsim_bandwidth_report(packet, opts.rate, opts.streams, opts.media, &r), "bandwidth");
  const auto bps = [](double v) { return static_cast<unsigned long long>(v); };
  if (opts.format == "csv") {
    std::printf("packet_bytes,rate_hz,streams,media_bps,per_stream_bps,per_car_bps,capacity_cars\n");
    std::printf("%zu,%g,%u,%llu,%llu,%llu,%u\n", r.packet_bytes, r.rate_hz, r.streams, bps(r.media_bps),
                bps(r.per_stream_bps), bps(r.per_car_bps), r.capacity_cars);
    return kExitOk;
  }
  const auto grouped = [](unsigned long long v) {
    std::string digits = std::to_string(v);
    for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(static_cast<std::size_t>(i), ",");
    return digits;
  };
  std::printf("packet size      %zu bytes\n", r.packet_bytes);
  std::printf("per stream       %s bps (%llu Kbps) at %g Hz\n", grouped(bps(r.per_stream_bps)).c_str(),
              bps(r.per_stream_bps) / 1000, r.rate_hz);
  std::printf("per car          %s bps (%llu Kbps) with %u streams\n", grouped(bps(r.per_car_bps)).c_str(),
              bps(r.per_car_bps) / 1000, r.streams);
  std::printf("capacity         %u cars at %s bps\n", r.capacity_cars, grouped(bps(r.media_bps)).c_str());
  return kExitOk;
}

struct PlotOptions {
  std::string traces = "results";
  std::string out;
  std::vector<std::string> modes;
};

int cmd_plot(const PlotOptions& opts, bool modes_given) {
  std::vector<std::string> modes;
  for (const std::string& m : modes_given ? opts.modes : kAllModes) {
    if (!m.empty()) modes.push_back(m);
  }
  if (modes.empty()) throw Failure{"no scenario modes selected for plotting"};
  const std::string out = opts.out.empty() ? opts.traces : opts.out;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Failure{"cannot create output directory '" + out + "': " + ec.message()};
  std::vector<const char*> names;
  for (const std::string& m : modes) names.push_back(m.c_str());
  std::size_t written = 0;
  check(coopsim_plot(opts.traces.c_str(), out.c_str(), names.data(), names.size(), &written), "plot");
  for (const std::string& m : modes) std::cout << (std::filesystem::path(out) / ("speed_" + m + ".svg")).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative intersection simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(coopsim_version()));

  RunOptions run_opts;
  std::string run_seed;
  std::string run_mode;
  CLI::App* run = app.add_subcommand("run", "Run the scenario's own mode (or --mode) for a number of trials");
  add_run_options(run, run_opts, run_seed);
  run->add_option("--mode", run_mode, "Scenario mode")->check(CLI::IsMember(kAllModes));

  RunOptions exp_opts;
  std::string exp_seed;
  CLI::App* experiment = app.add_subcommand("experiment", "Run all three scenario modes (or the selected ones)");
  add_run_options(experiment, exp_opts, exp_seed);
  experiment->add_option("--mode", exp_opts.modes, "Restrict to these modes (repeatable)")
      ->check(CLI::IsMember(kAllModes))
      ->delimiter(',');

  BandwidthOptions bw;
  std::size_t bw_points = 0;
  CLI::App* bandwidth = app.add_subcommand("bandwidth", "Future-path bandwidth and channel capacity");
  CLI::Option* points_opt =
      bandwidth->add_option("--points", bw_points, "Size packets for an n-point future path")->check(CLI::Range(0, 120));
  bandwidth->add_option("--packet-bytes", bw.packet_bytes, "Packet size in bytes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bandwidth->add_option("--rate", bw.rate, "Messages per second")->check(CLI::PositiveNumber)->capture_default_str();
  bandwidth->add_option("--streams", bw.streams, "Streams per car")->check(CLI::PositiveNumber)->capture_default_str();
  bandwidth->add_option("--media", bw.media, "Media data rate in bps")->check(CLI::PositiveNumber)->capture_default_str();
  bandwidth->add_option("--format", bw.format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();
  points_opt->excludes(bandwidth->get_option("--packet-bytes"));

  PlotOptions plot_opts;
  CLI::App* plot = app.add_subcommand("plot", "Speed-versus-position SVG plots from trace CSVs");
  plot->add_option("--traces", plot_opts.traces, "Directory holding traces_<mode>.csv")->capture_default_str();
  plot->add_option("--out", plot_opts.out, "Output directory (defaults to --traces)");
  CLI::Option* plot_modes = plot->add_option("--mode", plot_opts.modes, "Modes to plot (repeatable)")
                                ->delimiter(',')
                                ->allow_extra_args(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (run->parsed()) {
      if (!run_seed.empty()) run_opts.seed = parse_seed(run_seed, "--seed");
      std::vector<std::string> modes;
      if (!run_mode.empty()) modes.push_back(run_mode);
      return run_modes(run_opts, modes);
    }
    if (experiment->parsed()) {
      if (!exp_seed.empty()) exp_opts.seed = parse_seed(exp_seed, "--seed");
      return run_modes(exp_opts, exp_opts.modes.empty() ? kAllModes : exp_opts.modes);
    }
    if (bandwidth->parsed()) {
      if (points_opt->count() > 0) bw.points = bw_points;
      return cmd_bandwidth(bw);
    }
    if (plot->parsed()) return cmd_plot(plot_opts, plot_modes->count() > 0);
  } catch (const Failure& f) {
    std::cerr << "coopsim: " << f.message << "\n";
    return kExitError;
  }
  return kExitError;
}
