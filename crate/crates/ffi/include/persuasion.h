#ifndef PERSUASION_H
#define PERSUASION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Solver selection for [`pm_solve`].
 */
typedef enum PmMethod {
  /**
   * LP for finite horizons, value iteration otherwise.
   */
  PM_METHOD_DEFAULT = 0,
  PM_METHOD_LP = 1,
  PM_METHOD_INTERVAL = 2,
  PM_METHOD_GREEDY = 3,
  PM_METHOD_VALUE_ITER = 4,
} PmMethod;

/**
 * Result of a library call.
 */
typedef enum PmStatus {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or rational text.
   */
  PM_STATUS_PARSE = 3,
  /**
   * Well-formed input outside the model's domain.
   */
  PM_STATUS_INVALID_INPUT = 4,
  /**
   * The solver could not finish (size cap, tolerance, infeasibility).
   */
  PM_STATUS_SOLVER = 5,
  /**
   * A case ran to completion but some expectation failed.
   */
  PM_STATUS_CASE_FAILED = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  PM_STATUS_PANIC = 7,
} PmStatus;

/**
 * Opaque finite measure on `[0, 1]`.
 */
typedef struct PmMeasure PmMeasure;

/**
 * Opaque loaded scenario.
 */
typedef struct PmScenario PmScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *pm_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pm_string_free(char *s);

/**
 * Parses `[["p","w"], …]` into a measure handle.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum PmStatus pm_measure_from_json(const char *json, struct PmMeasure **out);

/**
 * Canonical JSON of a measure; free the result with [`pm_string_free`].
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_measure_to_json(const struct PmMeasure *m, char **out);

/**
 * # Safety
 * `m` must come from this library and not have been freed. Null is ignored.
 */
void pm_measure_free(struct PmMeasure *m);

/**
 * Total mass as a rational string.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_measure_total_mass(const struct PmMeasure *m, char **out);

/**
 * Barycenter as a rational string; fails on the zero measure.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_measure_barycenter(const struct PmMeasure *m, char **out);

/**
 * Mass of the largest sub-measure with barycenter at least `threshold`.
 *
 * # Safety
 * `m` must be a live handle; `threshold` a nul-terminated string; `out` writable.
 */
enum PmStatus pm_greedy_mass(const struct PmMeasure *m, const char *threshold, char **out);

/**
 * Interval sub-measure of the given mass with barycenter `threshold`, as a new handle.
 *
 * # Safety
 * `m` must be a live handle; `threshold` and `mass` nul-terminated strings; `out` writable.
 */
enum PmStatus pm_interval_measure(const struct PmMeasure *m,
                                  const char *threshold,
                                  const char *mass,
                                  struct PmMeasure **out);

/**
 * Builds a scenario from the text of a scenario file.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum PmStatus pm_scenario_load(const char *json, struct PmScenario **out);

/**
 * # Safety
 * `s` must come from this library and not have been freed. Null is ignored.
 */
void pm_scenario_free(struct PmScenario *s);

/**
 * Solves a scenario and writes the result JSON, the same document `persuade solve` prints.
 *
 * # Safety
 * `s` must be a live handle; `out_json` must be writable.
 */
enum PmStatus pm_solve(const struct PmScenario *s, enum PmMethod method, char **out_json);

/**
 * Runs a worked case (`counterexample`, `example1`, `example1-cutoffs`,
 * `example2`, `prop1`, `lemmas`). `params_json` is an optional object such as
 * `{"w2": "4/5"}`. The report is written even when the case fails, in which
 * case the status is `CaseFailed`.
 *
 * # Safety
 * `case_id` must be a nul-terminated string, `params_json` null or one;
 * `out_json` must be writable.
 */
enum PmStatus pm_case_run(const char *case_id, const char *params_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERSUASION_H */
