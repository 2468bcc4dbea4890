#ifndef PWQRE_H
#define PWQRE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PwqreStatus {
  /**
   * Success.
   */
  PWQRE_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  PWQRE_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PWQRE_STATUS_INVALID_UTF8 = 2,
  /**
   * The input was rejected.
   */
  PWQRE_STATUS_VALIDATION = 3,
  /**
   * A numerical failure occurred.
   */
  PWQRE_STATUS_NUMERIC = 4,
  /**
   * An index was out of range.
   */
  PWQRE_STATUS_OUT_OF_RANGE = 5,
  /**
   * The output buffer is too small; the required size was written.
   */
  PWQRE_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * An internal panic was caught.
   */
  PWQRE_STATUS_PANIC = 7,
} PwqreStatus;

/**
 * Opaque handle to a derived instance.
 */
typedef struct PwqreInstance PwqreInstance;

/**
 * Opaque handle to a computed report.
 */
typedef struct PwqreReport PwqreReport;

/**
 * Basis sizes of an instance.
 */
typedef struct PwqreBasis {
  /**
   * Electron basis size.
   */
  uint64_t g_size;
  /**
   * Ion basis size.
   */
  uint64_t gbar_size;
  /**
   * Total system qubits.
   */
  uint64_t system_qubits;
  /**
   * Electron qubits per axis.
   */
  uint32_t n[3];
  /**
   * Ion qubits per axis.
   */
  uint32_t nbar[3];
} PwqreBasis;

/**
 * One evolution plan of a report.
 */
typedef struct PwqrePlan {
  /**
   * Evolution time in atomic units.
   */
  double t;
  /**
   * Scaled time `lambda t`.
   */
  double tau;
  /**
   * Jacobi-Anger degree.
   */
  uint64_t degree;
  /**
   * Block-encoding calls.
   */
  uint64_t iterate_calls;
  /**
   * Total Toffoli count (as a double; exact below 2^53).
   */
  double toffoli_total;
  /**
   * Toffoli count per femtosecond.
   */
  double per_fs;
} PwqrePlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null; `needed` may be null.
 */
enum PwqreStatus pwqre_last_error(char *buf, size_t len, size_t *needed);

/**
 * Load a bundled instance by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PwqreStatus pwqre_instance_builtin(const char *name, struct PwqreInstance **out);

/**
 * Parse an instance from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PwqreStatus pwqre_instance_parse(const char *text, struct PwqreInstance **out);

/**
 * Release an instance. Null is accepted.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void pwqre_instance_free(struct PwqreInstance *inst);

/**
 * Particle counts `(eta_val, eta_ion, eta)`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must point to 3 writable values.
 */
enum PwqreStatus pwqre_instance_eta(const struct PwqreInstance *inst, uint64_t *out);

/**
 * Basis sizes and widths.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum PwqreStatus pwqre_instance_basis(const struct PwqreInstance *inst, struct PwqreBasis *out);

/**
 * Run the full report for `n_times` evolution times (atomic units).
 *
 * # Safety
 * `inst` must be a live handle; `times` must point to `n_times` values; `out` must be writable.
 */
enum PwqreStatus pwqre_report_run(const struct PwqreInstance *inst,
                                  const double *times,
                                  size_t n_times,
                                  double delta,
                                  struct PwqreReport **out);

/**
 * Release a report. Null is accepted.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void pwqre_report_free(struct PwqreReport *report);

/**
 * Exact total rescaling factor.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum PwqreStatus pwqre_report_lambda(const struct PwqreReport *report, double *out);

/**
 * Toffolis of one block-encoding call.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum PwqreStatus pwqre_report_toffolis_per_call(const struct PwqreReport *report, uint64_t *out);

/**
 * Number of plans in a report.
 *
 * # Safety
 * `report` must be a live handle or null (which yields 0).
 */
size_t pwqre_report_plan_count(const struct PwqreReport *report);

/**
 * Plan `index` of a report.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum PwqreStatus pwqre_report_plan(const struct PwqreReport *report,
                                   size_t index,
                                   struct PwqrePlan *out);

/**
 * The report as a JSON document.
 *
 * # Safety
 * `report` must be a live handle; `buf` must point to `len` writable bytes or be null; `needed` may be null.
 */
enum PwqreStatus pwqre_report_json(const struct PwqreReport *report,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

/**
 * Jacobi-Anger truncation degree for scaled time `tau` and error `delta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PwqreStatus pwqre_jacobi_anger_degree(double tau, double delta, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PWQRE_H */
