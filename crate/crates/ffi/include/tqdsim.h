#ifndef TQDSIM_H
#define TQDSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. 1-4 match the command-line exit codes.
 */
typedef enum TqdStatus {
  TQD_STATUS_OK = 0,
  TQD_STATUS_IO = 1,
  TQD_STATUS_CONFIG = 2,
  TQD_STATUS_NUMERICAL = 3,
  TQD_STATUS_INSUFFICIENT_DATA = 4,
  TQD_STATUS_NULL_POINTER = 10,
  TQD_STATUS_INVALID_UTF8 = 11,
  TQD_STATUS_BUFFER_TOO_SMALL = 12,
  TQD_STATUS_PANIC = 13,
} TqdStatus;

/**
 * Columns of a trajectory.
 */
typedef enum TqdColumn {
  TQD_COLUMN_TIME = 0,
  TQD_COLUMN_RHO_LL = 1,
  TQD_COLUMN_RHO_CC = 2,
  TQD_COLUMN_RHO_RR = 3,
  /**
   * Detector record (diffusive only).
   */
  TQD_COLUMN_RECORD = 4,
  TQD_COLUMN_CURRENT = 5,
  /**
   * Cumulative detections (jump only).
   */
  TQD_COLUMN_DETECTED = 6,
} TqdColumn;

/**
 * Experiment configuration (parameters, detector, run settings).
 */
typedef struct TqdConfig TqdConfig;

/**
 * Result of one diffusive or jump trajectory.
 */
typedef struct TqdTrajectory TqdTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *tqd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tqd_version(void);

/**
 * New configuration with the defaults of `mode` ("steady", "diffusive",
 * "jump", ...; null means "steady"). Returns null on error.
 *
 * # Safety
 * `mode` must be null or a NUL-terminated string.
 */
struct TqdConfig *tqd_config_new(const char *mode);

/**
 * # Safety
 * `cfg` must be null or a handle from `tqd_config_new`, freed once.
 */
void tqd_config_free(struct TqdConfig *cfg);

/**
 * Sets one configuration key, using the same keys and value syntax as the
 * command line (e.g. `"gamma"`, `"10"`).
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum TqdStatus tqd_config_set(struct TqdConfig *cfg, const char *key, const char *value);

/**
 * Full validation, including the time-step guard.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum TqdStatus tqd_config_validate(const struct TqdConfig *cfg);

/**
 * Steady state: writes `[rho_00, rho_LL, rho_CC, rho_RR]` to `populations`
 * (4 doubles) and the TQD current to `current`.
 *
 * # Safety
 * `cfg` must be a live handle; `populations` must hold 4 doubles.
 */
enum TqdStatus tqd_steady_state(const struct TqdConfig *cfg, double *populations, double *current);

/**
 * Runs one trajectory of the configured mode (`diffusive` or `jump`) on
 * substream `stream_id` of the configured seed.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum TqdStatus tqd_run_trajectory(const struct TqdConfig *cfg,
                                  uint64_t stream_id,
                                  struct TqdTrajectory **out);

/**
 * # Safety
 * `tr` must be null or a handle from `tqd_run_trajectory`, freed once.
 */
void tqd_trajectory_free(struct TqdTrajectory *tr);

/**
 * Number of stored rows.
 *
 * # Safety
 * `tr` must be a live handle; `len` a valid pointer.
 */
enum TqdStatus tqd_trajectory_len(const struct TqdTrajectory *tr, size_t *len);

/**
 * Copies one column into `buf`, which must hold at least `len` doubles
 * (`len` >= the trajectory length).
 *
 * # Safety
 * `tr` must be a live handle; `buf` must hold `len` doubles.
 */
enum TqdStatus tqd_trajectory_column(const struct TqdTrajectory *tr,
                                     enum TqdColumn column,
                                     double *buf,
                                     size_t len);

/**
 * Zero-frequency cross spectrum of two stationary series sampled every
 * `dt`, with its batch-means standard error.
 *
 * # Safety
 * `x` and `y` must each hold `n` doubles; outputs must be valid pointers.
 */
enum TqdStatus tqd_zero_freq_cross(const double *x,
                                   const double *y,
                                   size_t n,
                                   double dt,
                                   double t_burn,
                                   double t_cut,
                                   double *value,
                                   double *stderr);

/**
 * `s_tq / sqrt(s_tt s_qq)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TqdStatus tqd_pearson(double s_tq, double s_tt, double s_qq, double *out);

/**
 * Approximate `rho_CC` a time `t` after a detection.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum TqdStatus tqd_analytic_rho_cc(const struct TqdConfig *cfg, double t, double *out);

/**
 * `Omega^2 / Delta`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum TqdStatus tqd_effective_coupling(const struct TqdConfig *cfg, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TQDSIM_H */
