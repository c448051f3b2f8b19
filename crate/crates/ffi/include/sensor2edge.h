#ifndef SENSOR2EDGE_H
#define SENSOR2EDGE_H

/* Generated by cbindgen from the sensor2edge-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum S2eStatus {
  S2E_STATUS_OK = 0,
  S2E_STATUS_NULL_POINTER = 1,
  S2E_STATUS_INVALID_UTF8 = 2,
  // The scenario text failed validation.
  S2E_STATUS_INVALID = 3,
  S2E_STATUS_IO = 4,
  // The simulation could not run (e.g. no seeds).
  S2E_STATUS_SIMULATION = 5,
  // The requested statistic has no samples.
  S2E_STATUS_EMPTY = 6,
  S2E_STATUS_OUT_OF_RANGE = 7,
  // A Rust panic was caught at the boundary.
  S2E_STATUS_INTERNAL = 8,
} S2eStatus;

// Results of one run or a merged sweep.
typedef struct S2eRunResult S2eRunResult;

// A parsed, validated scenario.
typedef struct S2eScenario S2eScenario;

// Parses and validates scenario text. On failure the diagnostics, one per
// line with `line:column`, are available from `s2e_last_error_message`.
//
// # Safety
// `text` must be a NUL-terminated string; `out_scenario` must be writable.
enum S2eStatus s2e_scenario_load(const char *text, struct S2eScenario **out_scenario);

// Reads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out_scenario` must be writable.
enum S2eStatus s2e_scenario_load_file(const char *path, struct S2eScenario **out_scenario);

// The built-in testbed scenario.
//
// # Safety
// `out_scenario` must be writable.
enum S2eStatus s2e_scenario_default(struct S2eScenario **out_scenario);

// Overrides the number of capture sequences. Reports still echo the
// text the scenario was loaded from.
//
// # Safety
// `scenario` must be a live handle.
enum S2eStatus s2e_scenario_set_sequences(struct S2eScenario *scenario, uint32_t sequences);

// Sum of the configured per-hop budgets, in microseconds.
//
// # Safety
// `scenario` must be a live handle; `out_us` must be writable.
enum S2eStatus s2e_scenario_worst_case_us(const struct S2eScenario *scenario, uint64_t *out_us);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from a load function and not be freed twice.
void s2e_scenario_free(struct S2eScenario *scenario);

// Simulates one seed.
//
// # Safety
// `scenario` must be a live handle; `out_result` must be writable.
enum S2eStatus s2e_run(const struct S2eScenario *scenario,
                       uint64_t seed,
                       struct S2eRunResult **out_result);

// Simulates every seed in `seeds[0..count]` on `parallel` threads and
// merges the statistics.
//
// # Safety
// `seeds` must point to `count` readable values; other pointers as for
// `s2e_run`.
enum S2eStatus s2e_sweep(const struct S2eScenario *scenario,
                         const uint64_t *seeds,
                         size_t count,
                         size_t parallel,
                         struct S2eRunResult **out_result);

// Releases a result. Null is ignored.
//
// # Safety
// `result` must come from `s2e_run`/`s2e_sweep` and not be freed twice.
void s2e_result_free(struct S2eRunResult *result);

// Number of toggles raised by the source.
//
// # Safety
// `result` must be a live handle; `out_count` must be writable.
enum S2eStatus s2e_result_toggles(const struct S2eRunResult *result, uint64_t *out_count);

// Number of toggles that reached the actuator.
//
// # Safety
// As for `s2e_result_toggles`.
enum S2eStatus s2e_result_samples(const struct S2eRunResult *result, uint64_t *out_count);

// Number of toggles lost on the wireless link.
//
// # Safety
// As for `s2e_result_toggles`.
enum S2eStatus s2e_result_losses(const struct S2eRunResult *result, uint64_t *out_count);

// Mean end-to-end latency in microseconds.
//
// # Safety
// As for `s2e_result_toggles`.
enum S2eStatus s2e_result_mean_us(const struct S2eRunResult *result, double *out_mean);

// Largest end-to-end latency in microseconds.
//
// # Safety
// As for `s2e_result_toggles`.
enum S2eStatus s2e_result_max_us(const struct S2eRunResult *result, uint64_t *out_max);

// End-to-end percentile `p` (0..=100), at histogram resolution.
//
// # Safety
// As for `s2e_result_toggles`.
enum S2eStatus s2e_result_percentile_us(const struct S2eRunResult *result,
                                        double p,
                                        uint64_t *out_value);

// Full JSON report. `generated_at_unix` is stored verbatim; pass 0 for
// reproducible output. Release the string with `s2e_string_free`.
//
// # Safety
// `result` must be a live handle; `out_json` must be writable.
enum S2eStatus s2e_result_report_json(const struct S2eRunResult *result,
                                      uint64_t generated_at_unix,
                                      char **out_json);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void s2e_string_free(char *s);

// Message for the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *s2e_last_error_message(void);

// Bandwidth of one OFDM symbol (12 subcarriers) in kHz.
//
// # Safety
// `out_khz` must be writable.
enum S2eStatus s2e_symbol_bandwidth_khz(uint32_t scs_khz, uint32_t *out_khz);

// Minimum safety distance for a response time and approach speed. Either
// output pointer may be null.
//
// # Safety
// Non-null outputs must be writable.
enum S2eStatus s2e_safety_distance_m(uint64_t sfrt_us,
                                     double speed_m_s,
                                     double *out_meters,
                                     double *out_presented);

// Library version, static storage.
const char *s2e_version(void);

#endif  /* SENSOR2EDGE_H */
