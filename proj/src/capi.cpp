#include "coopsim/coopsim.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "coopsim/error.hpp"
#include "coopsim/netsim.hpp"
#include "coopsim/report.hpp"
#include "coopsim/scenario_io.hpp"
#include "coopsim/sim_engine.hpp"

struct coopsim_scenario {
  coopsim::ScenarioConfig cfg;
};

struct coopsim_experiment {
  coopsim::ExperimentSummary summary;
};

namespace {

thread_local std::string g_last_error;

coopsim_status status_of(coopsim::ErrorCode code) {
  switch (code) {
    case coopsim::ErrorCode::kInvalidArgument: return COOPSIM_ERR_INVALID_ARGUMENT;
    case coopsim::ErrorCode::kIo: return COOPSIM_ERR_IO;
    case coopsim::ErrorCode::kParse: return COOPSIM_ERR_PARSE;
    case coopsim::ErrorCode::kCodec: return COOPSIM_ERR_CODEC;
    case coopsim::ErrorCode::kNotFinished: return COOPSIM_ERR_NOT_FINISHED;
    case coopsim::ErrorCode::kInternal: return COOPSIM_ERR_INTERNAL;
  }
  return COOPSIM_ERR_INTERNAL;
}

coopsim_status fail(coopsim_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename F>
coopsim_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return COOPSIM_OK;
  } catch (const coopsim::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(COOPSIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(COOPSIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(COOPSIM_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw coopsim::InvalidArgument(what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* coopsim_last_error(void) { return g_last_error.c_str(); }

const char* coopsim_status_name(coopsim_status status) {
  switch (status) {
    case COOPSIM_OK: return "ok";
    case COOPSIM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case COOPSIM_ERR_IO: return "io";
    case COOPSIM_ERR_PARSE: return "parse";
    case COOPSIM_ERR_CODEC: return "codec";
    case COOPSIM_ERR_NOT_FINISHED: return "not_finished";
    case COOPSIM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* coopsim_version(void) { return "1.0.0"; }

void coopsim_string_free(char* s) { std::free(s); }
void coopsim_bytes_free(uint8_t* bytes) { std::free(bytes); }

coopsim_status coopsim_scenario_load(const char* path_or_name, coopsim_scenario** out) {
  return guarded([&] {
    require(path_or_name && out, "null argument");
    *out = new coopsim_scenario{coopsim::load_scenario(path_or_name)};
  });
}

coopsim_status coopsim_scenario_from_json(const char* json, coopsim_scenario** out) {
  return guarded([&] {
    require(json && out, "null argument");
    *out = new coopsim_scenario{coopsim::scenario_from_json(json)};
  });
}

coopsim_status coopsim_scenario_clone(const coopsim_scenario* scenario, coopsim_scenario** out) {
  return guarded([&] {
    require(scenario && out, "null argument");
    *out = new coopsim_scenario{scenario->cfg};
  });
}

coopsim_status coopsim_scenario_override(coopsim_scenario* scenario, const char* assignment) {
  return guarded([&] {
    require(scenario && assignment, "null argument");
    coopsim::ScenarioConfig next = scenario->cfg;
    coopsim::apply_override(next, assignment);
    scenario->cfg = std::move(next);
  });
}

coopsim_status coopsim_scenario_set_mode(coopsim_scenario* scenario, const char* mode) {
  return guarded([&] {
    require(scenario && mode, "null argument");
    scenario->cfg.mode = coopsim::scenario_mode_from_string(mode);
  });
}

coopsim_status coopsim_scenario_mode(const coopsim_scenario* scenario, const char** mode) {
  return guarded([&] {
    require(scenario && mode, "null argument");
    *mode = coopsim::to_string(scenario->cfg.mode);
  });
}

coopsim_status coopsim_scenario_master_seed(const coopsim_scenario* scenario, uint64_t* seed) {
  return guarded([&] {
    require(scenario && seed, "null argument");
    *seed = scenario->cfg.master_seed;
  });
}

coopsim_status coopsim_scenario_to_json(const coopsim_scenario* scenario, char** out) {
  return guarded([&] {
    require(scenario && out, "null argument");
    *out = dup_string(coopsim::scenario_to_json(scenario->cfg));
  });
}

void coopsim_scenario_free(coopsim_scenario* scenario) { delete scenario; }

coopsim_status coopsim_experiment_run(const coopsim_scenario* scenario, size_t trials, uint64_t master_seed,
                                      unsigned jobs, coopsim_experiment** out) {
  return guarded([&] {
    require(scenario && out, "null argument");
    require(trials >= 1, "trials must be at least 1");
    *out = new coopsim_experiment{
        coopsim::run_experiment(scenario->cfg, trials, master_seed, jobs == 0 ? 1 : jobs)};
  });
}

coopsim_status coopsim_experiment_mode(const coopsim_experiment* exp, const char** mode) {
  return guarded([&] {
    require(exp && mode, "null argument");
    *mode = coopsim::to_string(exp->summary.mode);
  });
}

coopsim_status coopsim_experiment_info_get(const coopsim_experiment* exp, coopsim_experiment_info* out) {
  return guarded([&] {
    require(exp && out, "null argument");
    const coopsim::ExperimentSummary& s = exp->summary;
    coopsim_experiment_info info{};
    info.trials = s.trials.size();
    info.unfinished_trials = s.unfinished_trials;
    for (const coopsim::TrialMetrics& t : s.trials) info.safety_violations += t.safety_violations;
    info.vehicle_count = s.vehicles.size();
    info.overall_mean_passing_time = s.overall_mean;
    *out = info;
  });
}

coopsim_status coopsim_experiment_vehicle(const coopsim_experiment* exp, size_t index,
                                          coopsim_vehicle_summary* out) {
  return guarded([&] {
    require(exp && out, "null argument");
    require(index < exp->summary.vehicles.size(), "vehicle index out of range");
    const coopsim::VehicleSummary& v = exp->summary.vehicles[index];
    *out = coopsim_vehicle_summary{v.id, v.mean_passing_time, v.first_pass_count, v.finished};
  });
}

coopsim_status coopsim_experiment_trial(const coopsim_experiment* exp, size_t index, coopsim_trial_info* out) {
  return guarded([&] {
    require(exp && out, "null argument");
    require(index < exp->summary.trials.size(), "trial index out of range");
    const coopsim::TrialMetrics& t = exp->summary.trials[index];
    coopsim_trial_info info{};
    info.seed = t.seed;
    info.first_pass = t.first_pass.value_or(0);
    info.all_finished = t.all_finished ? 1 : 0;
    info.safety_violations = t.safety_violations;
    info.min_zone_separation = t.min_zone_separation.value_or(-1.0);
    info.initiations = t.messages.initiations;
    info.terminations = t.messages.terminations;
    info.dropped_messages = t.messages.dropped;
    info.mode_transitions = t.mode_log.size();
    *out = info;
  });
}

coopsim_status coopsim_experiment_csv(const coopsim_experiment* exp, const char* which, char** out) {
  return guarded([&] {
    require(exp && which && out, "null argument");
    const std::string kind = which;
    if (kind == "traces") {
      *out = dup_string(coopsim::traces_csv(exp->summary));
    } else if (kind == "trials") {
      *out = dup_string(coopsim::trials_csv(exp->summary));
    } else if (kind == "mode_log") {
      *out = dup_string(coopsim::mode_log_csv(exp->summary));
    } else {
      throw coopsim::InvalidArgument("unknown csv kind '" + kind + "'");
    }
  });
}

coopsim_status coopsim_experiment_write(const coopsim_experiment* exp, const char* dir) {
  return guarded([&] {
    require(exp && dir, "null argument");
    coopsim::write_experiment(exp->summary, dir);
  });
}

void coopsim_experiment_free(coopsim_experiment* exp) { delete exp; }

coopsim_status coopsim_summary(const coopsim_experiment* const* exps, size_t count, const char* csv_path,
                               char** table) {
  return guarded([&] {
    require(exps || count == 0, "null argument");
    std::vector<coopsim::ExperimentSummary> all;
    all.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(exps[i] != nullptr, "null experiment");
      all.push_back(exps[i]->summary);
    }
    if (csv_path) coopsim::write_text_file(csv_path, coopsim::summary_csv(all));
    if (table) *table = dup_string(coopsim::summary_table(all));
  });
}

coopsim_status coopsim_bandwidth_report(size_t packet_bytes, double rate_hz, unsigned streams, double media_bps,
                                        coopsim_bandwidth* out) {
  return guarded([&] {
    require(out, "null argument");
    const coopsim::BandwidthReport r = coopsim::bandwidth_report(packet_bytes, rate_hz, streams, media_bps);
    *out = coopsim_bandwidth{r.packet_bytes, r.rate_hz,     r.streams,      r.media_bps,
                             r.per_stream_bps, r.per_car_bps, r.capacity_cars};
  });
}

coopsim_status coopsim_future_path_wire_bytes(size_t points, size_t* out) {
  return guarded([&] {
    require(out, "null argument");
    *out = coopsim::future_path_wire_bytes(points);
  });
}

coopsim_status coopsim_plot(const char* traces_dir, const char* out_dir, const char* const* modes,
                            size_t mode_count, size_t* files_written) {
  return guarded([&] {
    require(traces_dir && out_dir, "null argument");
    require(mode_count > 0 && modes, "no scenarios selected for plotting");
    std::vector<std::string> names;
    for (size_t i = 0; i < mode_count; ++i) {
      require(modes[i] != nullptr, "null mode");
      names.emplace_back(modes[i]);
    }
    const size_t n = coopsim::plot_traces(traces_dir, out_dir, names);
    if (files_written) *files_written = n;
  });
}

coopsim_status coopsim_message_json_to_binary(const char* json, uint8_t** bytes, size_t* size) {
  return guarded([&] {
    require(json && bytes && size, "null argument");
    const std::vector<std::uint8_t> encoded = coopsim::encode_binary(coopsim::decode_json(json));
    uint8_t* out = static_cast<uint8_t*>(std::malloc(encoded.empty() ? 1 : encoded.size()));
    if (!out) throw std::bad_alloc();
    if (!encoded.empty()) std::memcpy(out, encoded.data(), encoded.size());
    *bytes = out;
    *size = encoded.size();
  });
}

coopsim_status coopsim_message_binary_to_json(const uint8_t* bytes, size_t size, char** json) {
  return guarded([&] {
    require((bytes || size == 0) && json, "null argument");
    *json = dup_string(coopsim::encode_json(coopsim::decode_binary({bytes, size})));
  });
}

}  // extern "C"
