#ifndef CBD_H
#define CBD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CbdStatus {
  CBD_STATUS_OK = 0,
  CBD_STATUS_NULL_POINTER = 1,
  CBD_STATUS_INVALID_INPUT = 2,
  CBD_STATUS_SOLVER_FAILURE = 3,
  CBD_STATUS_PANIC = 4,
} CbdStatus;

/**
 * Result of [`cbd_analyze`].
 */
typedef struct CbdReport CbdReport;

/**
 * Four context tables.
 */
typedef struct CbdSystem CbdSystem;

/**
 * Numeric summary of a report.
 */
typedef struct CbdSummary {
  double delta0;
  double delta_chsh;
  double s_max;
  double delta_min;
  double genuine;
  bool bdk_satisfied;
  bool jpd_exists;
  bool degenerate_coupling;
  bool consistent;
} CbdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *cbd_last_error(void);

/**
 * Builds a system from 16 probabilities: contexts (1,1), (1,2), (2,1),
 * (2,2), each as `p(+,+), p(+,-), p(-,+), p(-,-)`.
 *
 * # Safety
 * `probs` must point to 16 doubles and `out` must be writable.
 */
enum CbdStatus cbd_system_from_tables(const double *probs, struct CbdSystem **out);

/**
 * Builds a system from a generator description such as
 * `{"kind":"random","seed":3}`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string and `out` writable.
 */
enum CbdStatus cbd_system_generate(const char *spec_json, struct CbdSystem **out);

/**
 * Parses a system document (the `cbd generate` output format).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CbdStatus cbd_system_from_json(const char *json, struct CbdSystem **out);

/**
 * # Safety
 * `system` must come from a `cbd_system_*` constructor, or be null.
 */
void cbd_system_free(struct CbdSystem *system);

/**
 * Writes `Δ₀` and `s_max`.
 *
 * # Safety
 * `system` must be a live handle; `delta0` and `s_max` writable.
 */
enum CbdStatus cbd_system_measures(const struct CbdSystem *system, double *delta0, double *s_max);

/**
 * Runs the full analysis. `tol <= 0` selects the default tolerance.
 *
 * # Safety
 * `system` must be a live handle and `out` writable.
 */
enum CbdStatus cbd_analyze(const struct CbdSystem *system,
                           double tol,
                           bool include_witness,
                           struct CbdReport **out);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum CbdStatus cbd_report_summary(const struct CbdReport *report, struct CbdSummary *out);

/**
 * Report as JSON. Release the string with [`cbd_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum CbdStatus cbd_report_json(const struct CbdReport *report, char **out);

/**
 * # Safety
 * `report` must come from [`cbd_analyze`], or be null.
 */
void cbd_report_free(struct CbdReport *report);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void cbd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CBD_H */
