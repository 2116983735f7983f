#ifndef ENSEMBLAB_H
#define ENSEMBLAB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `1` and `2` match the command-line exit codes.
typedef enum EnsStatus {
  ENS_STATUS_OK = 0,
  // Malformed or out-of-range arguments.
  ENS_STATUS_INVALID_INPUT = 1,
  // Valid input the analysis could not handle (too little data,
  // numerical failure).
  ENS_STATUS_ANALYSIS_ERROR = 2,
  ENS_STATUS_NULL_POINTER = 3,
  // A caller-provided buffer is too short.
  ENS_STATUS_BUFFER_TOO_SMALL = 4,
  // Internal panic caught at the boundary.
  ENS_STATUS_PANIC = 5,
} EnsStatus;

// Opaque ensemble handle.
typedef struct EnsEnsemble EnsEnsemble;

// Point estimate with its naive standard error.
typedef struct EnsEstimate {
  double estimate;
  double std_error;
  size_t n_samples;
  double autocorr_lag1;
} EnsEstimate;

typedef struct EnsKsResult {
  double statistic;
  double critical_value;
  double p_value;
  double alpha;
  // Non-zero when the samples are compatible at level `alpha`.
  bool passes;
  size_t n_a;
  size_t n_b;
} EnsKsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *ens_last_error(void);

// Library version as a static NUL-terminated string.
const char *ens_version(void);

// Simulates `n_paths` paths of the process described by `spec_json`
// (`{"kind": ..., "params": {...}}`) on the grid `t0 + k·dt`,
// `k = 0..=n_steps`.
//
// # Safety
// `spec_json` must be NUL-terminated; `out` must be writable.
enum EnsStatus ens_ensemble_simulate(const char *spec_json,
                                     double t0,
                                     double dt,
                                     size_t n_steps,
                                     size_t n_paths,
                                     uint64_t seed,
                                     size_t substeps,
                                     struct EnsEnsemble **out);

// Builds an ensemble from caller data: `n_paths` rows of `n_points` values,
// row-major.
//
// # Safety
// `values` must point to `n_paths * n_points` doubles; `out` must be
// writable.
enum EnsStatus ens_ensemble_from_values(const double *values,
                                        size_t n_paths,
                                        size_t n_points,
                                        double t0,
                                        double dt,
                                        struct EnsEnsemble **out);

// Reads an ensemble in the `ENSB1` binary layout.
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
enum EnsStatus ens_ensemble_read_binary(const char *path, struct EnsEnsemble **out);

// Writes the ensemble in the `ENSB1` binary layout.
//
// # Safety
// `ensemble` must come from this library; `path` must be NUL-terminated.
enum EnsStatus ens_ensemble_write_binary(const struct EnsEnsemble *ensemble, const char *path);

// Writes the ensemble as CSV (`path_id,t,x`).
//
// # Safety
// As [`ens_ensemble_write_binary`].
enum EnsStatus ens_ensemble_write_csv(const struct EnsEnsemble *ensemble, const char *path);

// Releases a handle. NULL is ignored.
//
// # Safety
// `ensemble` must come from this library and not be used afterwards.
void ens_ensemble_free(struct EnsEnsemble *ensemble);

// Number of paths; 0 for NULL.
//
// # Safety
// `ensemble` must be NULL or come from this library.
size_t ens_ensemble_n_paths(const struct EnsEnsemble *ensemble);

// Points per path (`n_steps + 1`); 0 for NULL.
//
// # Safety
// `ensemble` must be NULL or come from this library.
size_t ens_ensemble_n_points(const struct EnsEnsemble *ensemble);

// Grid start and step.
//
// # Safety
// `ensemble` must come from this library; outputs must be writable.
enum EnsStatus ens_ensemble_grid(const struct EnsEnsemble *ensemble, double *t0, double *dt);

// Copies path `index` into `out[0..n_points]`.
//
// # Safety
// `out` must have room for `len` doubles.
enum EnsStatus ens_ensemble_path_values(const struct EnsEnsemble *ensemble,
                                        size_t index,
                                        double *out,
                                        size_t len);

// `⟨x(t, lag)^power⟩` across paths, `power` 1 or 2.
//
// # Safety
// `ensemble` must come from this library; `out` must be writable.
enum EnsStatus ens_ensemble_moment(const struct EnsEnsemble *ensemble,
                                   double t,
                                   double lag,
                                   uint32_t power,
                                   struct EnsEstimate *out);

// Sliding time average of `x(t, lag)^power` along path `index`.
//
// # Safety
// `ensemble` must come from this library; `out` must be writable.
enum EnsStatus ens_sliding_moment(const struct EnsEnsemble *ensemble,
                                  size_t index,
                                  double lag,
                                  double stride,
                                  uint32_t power,
                                  struct EnsEstimate *out);

// Per-path sliding averages over `[t_start, t_end]`, averaged across paths.
//
// # Safety
// `ensemble` must come from this library; `out` must be writable.
enum EnsStatus ens_ensemble_sliding_moment(const struct EnsEnsemble *ensemble,
                                           double lag,
                                           double stride,
                                           uint32_t power,
                                           double t_start,
                                           double t_end,
                                           struct EnsEstimate *out);

// Correlation of backward and forward increments around `t`. Either output
// may be NULL.
//
// # Safety
// `ensemble` must come from this library.
enum EnsStatus ens_increment_autocorrelation(const struct EnsEnsemble *ensemble,
                                             double t,
                                             double lag,
                                             struct EnsEstimate *raw,
                                             struct EnsEstimate *normalized);

// Correlation of backward and forward squared increments around `t`.
// Either output may be NULL.
//
// # Safety
// `ensemble` must come from this library.
enum EnsStatus ens_volatility_correlation(const struct EnsEnsemble *ensemble,
                                          double t,
                                          double lag,
                                          struct EnsEstimate *raw,
                                          struct EnsEstimate *normalized);

// `R(lag) = ⟨x(t) x(t + lag)⟩` (mean-subtracted) for each of `n_lags`
// lags. `std_errors` may be NULL.
//
// # Safety
// `lags`, `values` and (if given) `std_errors` must hold `n_lags` doubles.
enum EnsStatus ens_pair_correlation(const struct EnsEnsemble *ensemble,
                                    double base_t,
                                    const double *lags,
                                    size_t n_lags,
                                    double *values,
                                    double *std_errors);

// `(1/T) ∫ R(s) ds` over a pair-correlation curve (trapezoid rule).
//
// # Safety
// `lags` and `values` must hold `n` doubles; `out` must be writable.
enum EnsStatus ens_ergodicity_diagnostic(const double *lags,
                                         const double *values,
                                         size_t n,
                                         double *out);

// fBm covariance `σ²/2 (s^2H + t^2H − |t − s|^2H)`.
//
// # Safety
// `out` must be writable.
enum EnsStatus ens_fbm_covariance(double s, double t, double hurst, double sigma, double *out);

// Two-sample Kolmogorov–Smirnov test.
//
// # Safety
// `a` and `b` must hold `n_a` and `n_b` doubles; `out` must be writable.
enum EnsStatus ens_ks_two_sample(const double *a,
                                 size_t n_a,
                                 const double *b,
                                 size_t n_b,
                                 double alpha,
                                 struct EnsKsResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENSEMBLAB_H */
