#ifndef QGLAB_H
#define QGLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QgStatus {
  QG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QG_STATUS_NULL_POINTER = 1,
  /**
   * Rejected input: bad grid, parameter, index window or configuration.
   */
  QG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation flagged blow-up; outputs hold the last valid state.
   */
  QG_STATUS_BLOW_UP = 3,
  /**
   * File system or format failure.
   */
  QG_STATUS_IO = 4,
  /**
   * Output buffer too small; the required length is reported.
   */
  QG_STATUS_BUFFER_TOO_SMALL = 5,
  QG_STATUS_PANIC = 6,
  QG_STATUS_INTERNAL = 7,
} QgStatus;

/**
 * Opaque spectral field.
 */
typedef struct QgField QgField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *qg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qg_version(void);

/**
 * Builds a field from `n * n` real samples (row-major, `y` slowest) on a box of side `length`.
 *
 * # Safety
 * `samples` must point to `n * n` readable doubles; `out` must be writable.
 */
enum QgStatus qg_field_from_samples(size_t n,
                                    double length,
                                    const double *samples,
                                    struct QgField **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `field` must come from this library and not be freed twice.
 */
void qg_field_free(struct QgField *field);

/**
 * Grid size and box side of a field.
 *
 * # Safety
 * `field` must be a live handle; `n` and `length` must be writable.
 */
enum QgStatus qg_field_shape(const struct QgField *field, size_t *n, double *length);

/**
 * Copies the real samples into `out`, which holds `cap` doubles.
 *
 * # Safety
 * `field` must be a live handle; `out` must hold `cap` writable doubles.
 */
enum QgStatus qg_field_samples(const struct QgField *field, double *out, size_t cap);

/**
 * Homogeneous Sobolev norm of order `s`.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum QgStatus qg_field_sobolev_norm(const struct QgField *field, double s, double *out);

/**
 * `L^p` norms of the dyadic blocks, lowest block first. `count` receives the
 * number of blocks (also on [`QgStatus::BufferTooSmall`]) and `j_lo` the
 * index of the first.
 *
 * # Safety
 * `field` must be a live handle; `out` must hold `cap` doubles; `count` and `j_lo` must be writable.
 */
enum QgStatus qg_field_block_norms(const struct QgField *field,
                                   double p,
                                   double *out,
                                   size_t cap,
                                   size_t *count,
                                   int32_t *j_lo);

/**
 * Applies the exact linear solution operator for time `t`.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum QgStatus qg_apply_propagator(const struct QgField *field,
                                  double alpha,
                                  double kappa,
                                  double dispersion,
                                  double t,
                                  struct QgField **out);

/**
 * Integrates the full equation to `t_end` with fixed step `dt`. On blow-up the
 * last valid state is returned together with [`QgStatus::BlowUp`].
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
enum QgStatus qg_simulate(const struct QgField *field,
                          double alpha,
                          double kappa,
                          double dispersion,
                          double dt,
                          double t_end,
                          struct QgField **out);

/**
 * Validates `(alpha, p, s)` given as exact decimals or fractions (`"21/20"`) and
 * writes the time exponent `r` as a NUL-terminated fraction into `buf`.
 *
 * # Safety
 * The three strings must be NUL-terminated; `buf` must hold `cap` bytes.
 */
enum QgStatus qg_time_exponent(const char *alpha,
                               const char *p,
                               const char *s,
                               char *buf,
                               size_t cap);

/**
 * Runs a CLI subcommand (`"picard"`, `"simulate"`, ...) with a configuration
 * file, writing artifacts into `out_dir`.
 *
 * # Safety
 * All strings must be NUL-terminated.
 */
enum QgStatus qg_run(const char *subcommand,
                     const char *config_path,
                     const char *out_dir,
                     uint64_t seed);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* QGLAB_H */
