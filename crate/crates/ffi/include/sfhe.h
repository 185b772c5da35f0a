#ifndef SFHE_H
#define SFHE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfheStatus {
  SFHE_STATUS_OK = 0,
  SFHE_STATUS_NULL_POINTER = 1,
  SFHE_STATUS_INVALID_INPUT = 2,
  SFHE_STATUS_OUT_OF_RANGE = 3,
  SFHE_STATUS_NOT_INTEGRABLE = 4,
  SFHE_STATUS_TOLERANCE_NOT_MET = 5,
  SFHE_STATUS_PSD_REPAIR_EXCEEDED = 6,
  SFHE_STATUS_NYQUIST_VIOLATION = 7,
  SFHE_STATUS_TRUNCATION_BUDGET_EXCEEDED = 8,
  SFHE_STATUS_EDGE_TOO_CLOSE = 9,
  SFHE_STATUS_REGION_VIOLATION = 10,
  SFHE_STATUS_SEPARATION_VIOLATED = 11,
  SFHE_STATUS_DIVERGENT_SERIES = 12,
  SFHE_STATUS_RESOLUTION_INSUFFICIENT = 13,
  SFHE_STATUS_VALIDITY_WINDOW_VIOLATED = 14,
  SFHE_STATUS_CONFIG = 15,
  SFHE_STATUS_IO = 16,
  SFHE_STATUS_BUFFER_TOO_SMALL = 17,
  SFHE_STATUS_PANIC = 18,
} SfheStatus;

/**
 * Opaque model handle: parameters plus a default quadrature policy.
 */
typedef struct SfheModel SfheModel;

/**
 * Opaque spectral sampler handle.
 */
typedef struct SfheSampler SfheSampler;

/**
 * Closed-form constants of a model.
 */
typedef struct SfheConstants {
  double c1h;
  double c21;
  double kappa;
  double space_exponent;
  double roughness;
} SfheConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` is null or valid for `len` bytes.
 */
size_t sfhe_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out` is valid for writing one pointer.
 */
enum SfheStatus sfhe_model_new(double alpha, double hurst, struct SfheModel **out);

/**
 * # Safety
 * `model` is null or was returned by `sfhe_model_new` and not yet freed.
 */
void sfhe_model_free(struct SfheModel *model);

/**
 * # Safety
 * `model` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_model_constants(const struct SfheModel *model, struct SfheConstants *out);

/**
 * E[u(t, x)^2].
 *
 * # Safety
 * `model` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_model_variance(const struct SfheModel *model, double t, double *out);

/**
 * Psi(t, L) = 1 + sqrt(log2(L / t^{1/alpha} v 1)).
 *
 * # Safety
 * `model` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_model_psi(const struct SfheModel *model, double t, double l, double *out);

/**
 * Canonical metric d1 between (t, x) and (s, y), with its error bound.
 *
 * # Safety
 * `model` is a live handle; `value` and `error_bound` are writable.
 */
enum SfheStatus sfhe_metric_d1(const struct SfheModel *model,
                               double t,
                               double x,
                               double s,
                               double y,
                               double *value,
                               double *error_bound);

/**
 * Spatial increment metric d2 at time t with increment h.
 *
 * # Safety
 * `model` is a live handle; `value` and `error_bound` are writable.
 */
enum SfheStatus sfhe_metric_d2(const struct SfheModel *model,
                               double t,
                               double h,
                               double x,
                               double y,
                               double *value,
                               double *error_bound);

/**
 * Temporal increment metric d3 at time t with increment tau.
 *
 * # Safety
 * `model` is a live handle; `value` and `error_bound` are writable.
 */
enum SfheStatus sfhe_metric_d3(const struct SfheModel *model,
                               double t,
                               double tau,
                               double x,
                               double y,
                               double *value,
                               double *error_bound);

/**
 * Spatial correlation of u(t, .) at the given lag.
 *
 * # Safety
 * `model` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_correlation(const struct SfheModel *model, double t, double lag, double *out);

/**
 * Chaining upper bound with the d1 diameter law on [0, horizon] x [-L, L].
 *
 * # Safety
 * `model` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_chaining_bound(const struct SfheModel *model,
                                    double horizon,
                                    double half_width,
                                    double multiplier,
                                    double *out);

/**
 * 2 exp(-lambda^2 / (2 sigma^2)); NaN for invalid input.
 */
double sfhe_borell_tail(double sigma_sq, double lambda);

/**
 * Spectral sampler on the grid t0 + i dt (i < nt), x0 + j dx (j < nx).
 *
 * # Safety
 * `model` is a live handle; `out` is valid for writing one pointer.
 */
enum SfheStatus sfhe_sampler_new(const struct SfheModel *model,
                                 double t0,
                                 double dt,
                                 size_t nt,
                                 double x0,
                                 double dx,
                                 size_t nx,
                                 struct SfheSampler **out);

/**
 * # Safety
 * `sampler` is null or was returned by `sfhe_sampler_new` and not yet freed.
 */
void sfhe_sampler_free(struct SfheSampler *sampler);

/**
 * Number of doubles a sample occupies (nt * nx).
 *
 * # Safety
 * `sampler` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_sampler_len(const struct SfheSampler *sampler, size_t *out);

/**
 * Relative wrap bias of the lag-zero variance at the last slice.
 *
 * # Safety
 * `sampler` is a live handle; `out` is writable.
 */
enum SfheStatus sfhe_sampler_lag0_bias(const struct SfheSampler *sampler, double *out);

/**
 * Draws replicate `replicate` of stream `seed` into `buf` (row-major time x
 * space). `len` must be at least `sfhe_sampler_len`.
 *
 * # Safety
 * `sampler` is a live handle; `buf` is valid for `len` doubles.
 */
enum SfheStatus sfhe_sampler_draw(const struct SfheSampler *sampler,
                                  uint64_t seed,
                                  uint32_t replicate,
                                  double *buf,
                                  size_t len);

/**
 * Runs the experiment described by `config` (config-file text) and writes
 * the result files next to `out_path`.
 *
 * # Safety
 * `config` and `out_path` are NUL-terminated strings.
 */
enum SfheStatus sfhe_experiment_run(const char *config, const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFHE_H */
