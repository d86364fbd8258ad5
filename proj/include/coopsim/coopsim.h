#ifndef COOPSIM_COOPSIM_H
#define COOPSIM_COOPSIM_H

/* C interface to the cooperative intersection simulator.
 *
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Every function that can fail returns a coopsim_status and
 * records a message retrievable with coopsim_last_error() on the calling
 * thread. Strings and byte buffers returned through out-parameters are
 * heap-allocated and must be released with coopsim_string_free or
 * coopsim_bytes_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COOPSIM_API __declspec(dllexport)
#else
#define COOPSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum coopsim_status {
  COOPSIM_OK = 0,
  COOPSIM_ERR_INVALID_ARGUMENT = 1,
  COOPSIM_ERR_IO = 2,
  COOPSIM_ERR_PARSE = 3,
  COOPSIM_ERR_CODEC = 4,
  COOPSIM_ERR_NOT_FINISHED = 5,
  COOPSIM_ERR_INTERNAL = 6
} coopsim_status;

typedef struct coopsim_scenario coopsim_scenario;
typedef struct coopsim_experiment coopsim_experiment;

/* Message for the most recent failure on this thread; empty after success. */
COOPSIM_API const char* coopsim_last_error(void);
COOPSIM_API const char* coopsim_status_name(coopsim_status status);
COOPSIM_API const char* coopsim_version(void);

COOPSIM_API void coopsim_string_free(char* s);
COOPSIM_API void coopsim_bytes_free(uint8_t* bytes);

/* ---- Scenarios ---------------------------------------------------------- */

/* "default" selects the built-in scenario; anything else is a file path. */
COOPSIM_API coopsim_status coopsim_scenario_load(const char* path_or_name, coopsim_scenario** out);
COOPSIM_API coopsim_status coopsim_scenario_from_json(const char* json, coopsim_scenario** out);
COOPSIM_API coopsim_status coopsim_scenario_clone(const coopsim_scenario* scenario, coopsim_scenario** out);
/* assignment is "dotted.key=value", e.g. "params.d_margin=5.0". */
COOPSIM_API coopsim_status coopsim_scenario_override(coopsim_scenario* scenario, const char* assignment);
/* mode is "stand_alone", "future_path_only" or "future_path_with_rsu". */
COOPSIM_API coopsim_status coopsim_scenario_set_mode(coopsim_scenario* scenario, const char* mode);
COOPSIM_API coopsim_status coopsim_scenario_mode(const coopsim_scenario* scenario, const char** mode);
COOPSIM_API coopsim_status coopsim_scenario_master_seed(const coopsim_scenario* scenario, uint64_t* seed);
COOPSIM_API coopsim_status coopsim_scenario_to_json(const coopsim_scenario* scenario, char** out);
COOPSIM_API void coopsim_scenario_free(coopsim_scenario* scenario);

/* ---- Experiments -------------------------------------------------------- */

typedef struct coopsim_experiment_info {
  size_t trials;
  size_t unfinished_trials;
  size_t safety_violations; /* summed over trials */
  size_t vehicle_count;
  double overall_mean_passing_time;
} coopsim_experiment_info;

typedef struct coopsim_vehicle_summary {
  uint32_t id;
  double mean_passing_time;
  size_t first_pass_count;
  size_t finished;
} coopsim_vehicle_summary;

typedef struct coopsim_trial_info {
  uint64_t seed;
  uint32_t first_pass; /* 0 when nobody reached the destination */
  int all_finished;
  size_t safety_violations;
  double min_zone_separation; /* negative when never both inside the zone */
  uint64_t initiations;
  uint64_t terminations;
  uint64_t dropped_messages;
  size_t mode_transitions;
} coopsim_trial_info;

/* Runs trials on up to `jobs` threads (0 means 1). */
COOPSIM_API coopsim_status coopsim_experiment_run(const coopsim_scenario* scenario, size_t trials,
                                                  uint64_t master_seed, unsigned jobs,
                                                  coopsim_experiment** out);
COOPSIM_API coopsim_status coopsim_experiment_mode(const coopsim_experiment* exp, const char** mode);
COOPSIM_API coopsim_status coopsim_experiment_info_get(const coopsim_experiment* exp,
                                                       coopsim_experiment_info* out);
COOPSIM_API coopsim_status coopsim_experiment_vehicle(const coopsim_experiment* exp, size_t index,
                                                      coopsim_vehicle_summary* out);
COOPSIM_API coopsim_status coopsim_experiment_trial(const coopsim_experiment* exp, size_t index,
                                                    coopsim_trial_info* out);
/* which is "traces", "trials" or "mode_log". */
COOPSIM_API coopsim_status coopsim_experiment_csv(const coopsim_experiment* exp, const char* which, char** out);
/* Writes traces_<mode>.csv, trials_<mode>.csv and mode_log_<mode>.csv into dir. */
COOPSIM_API coopsim_status coopsim_experiment_write(const coopsim_experiment* exp, const char* dir);
COOPSIM_API void coopsim_experiment_free(coopsim_experiment* exp);

/* Summary over several experiments. csv_path may be NULL; table may be NULL. */
COOPSIM_API coopsim_status coopsim_summary(const coopsim_experiment* const* exps, size_t count,
                                           const char* csv_path, char** table);

/* ---- Bandwidth ---------------------------------------------------------- */

typedef struct coopsim_bandwidth {
  size_t packet_bytes;
  double rate_hz;
  unsigned streams;
  double media_bps;
  double per_stream_bps;
  double per_car_bps;
  unsigned capacity_cars;
} coopsim_bandwidth;

COOPSIM_API coopsim_status coopsim_bandwidth_report(size_t packet_bytes, double rate_hz, unsigned streams,
                                                    double media_bps, coopsim_bandwidth* out);
/* Binary size of an n-point future path message. */
COOPSIM_API coopsim_status coopsim_future_path_wire_bytes(size_t points, size_t* out);

/* ---- Plots -------------------------------------------------------------- */

/* Reads traces_<mode>.csv from traces_dir and writes speed_<mode>.svg into
 * out_dir for each of the given modes. */
COOPSIM_API coopsim_status coopsim_plot(const char* traces_dir, const char* out_dir, const char* const* modes,
                                        size_t mode_count, size_t* files_written);

/* ---- Messages ----------------------------------------------------------- */

COOPSIM_API coopsim_status coopsim_message_json_to_binary(const char* json, uint8_t** bytes, size_t* size);
COOPSIM_API coopsim_status coopsim_message_binary_to_json(const uint8_t* bytes, size_t size, char** json);

#ifdef __cplusplus
}
#endif

#endif /* COOPSIM_COOPSIM_H */
