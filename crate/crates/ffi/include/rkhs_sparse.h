/* C interface for the rkhs-sparse library. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum RkhsSparseStatus {
  RKHS_SPARSE_STATUS_OK = 0,
  RKHS_SPARSE_STATUS_NULL_POINTER = 1,
  RKHS_SPARSE_STATUS_INVALID_ARGUMENT = 2,
  RKHS_SPARSE_STATUS_UTF8_ERROR = 3,
  RKHS_SPARSE_STATUS_NUMERICAL_FAILURE = 4,
} RkhsSparseStatus;

// Opaque fitted-model handle.
typedef struct RkhsSparseModel RkhsSparseModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread. Never null.
const char *rkhs_sparse_last_error_message(void);

// Cap worker parallelism (results are identical for every cap). Only the
// first successful call takes effect.
enum RkhsSparseStatus rkhs_sparse_set_threads(uintptr_t threads);

// Fit a kernel M-estimator.
//
// `x`: row-major n x p predictor matrix. `y`: length-n responses.
// `loss`: "square", "check", "eps", "logistic", or "hinge"; `tau` and
// `epsilon` are read only for "check" and "eps" respectively.
// `bandwidth` <= 0 selects the median heuristic, a positive value is used
// as the fixed kernel length-scale. On success `*out_model` owns the model.
//
// # Safety
// `x` must point to n*p readable doubles, `y` to n readable doubles,
// `loss` to a NUL-terminated string, and `out_model` to a writable pointer
// slot. The returned handle must be released with `rkhs_sparse_model_free`.
enum RkhsSparseStatus rkhs_sparse_fit(const double *x,
                                      uintptr_t n,
                                      uintptr_t p,
                                      const double *y,
                                      const char *loss,
                                      double tau,
                                      double epsilon,
                                      double lambda,
                                      double bandwidth,
                                      struct RkhsSparseModel **out_model);

// Release a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a pointer returned by `rkhs_sparse_fit` that has
// not been freed yet.
void rkhs_sparse_model_free(struct RkhsSparseModel *model);

// Number of training rows (0 for a null handle).
//
// # Safety
// `model` must be null or a live model handle.
uintptr_t rkhs_sparse_model_n(const struct RkhsSparseModel *model);

// Number of predictor columns (0 for a null handle).
//
// # Safety
// `model` must be null or a live model handle.
uintptr_t rkhs_sparse_model_p(const struct RkhsSparseModel *model);

// Fetch model diagnostics. Any out-pointer may be null to skip that field.
//
// # Safety
// `model` must be a live model handle; non-null out-pointers must be
// writable.
enum RkhsSparseStatus rkhs_sparse_model_stats(const struct RkhsSparseModel *model,
                                              double *out_sigma,
                                              double *out_lambda,
                                              double *out_objective,
                                              uintptr_t *out_iterations,
                                              bool *out_converged);

// Predict at `m` row-major points of the model's dimension; writes `m`
// values to `out`.
//
// # Safety
// `model` must be a live handle, `x` must point to m*p readable doubles
// (p = model dimension), and `out` to m writable doubles.
enum RkhsSparseStatus rkhs_sparse_model_predict(const struct RkhsSparseModel *model,
                                                const double *x,
                                                uintptr_t m,
                                                double *out);

// Empirical squared gradient norms on the training sample; writes p values.
//
// # Safety
// `model` must be a live handle and `out` must point to p writable doubles.
enum RkhsSparseStatus rkhs_sparse_model_gradient_scores(const struct RkhsSparseModel *model,
                                                        double *out);

// Threshold the model's gradient scores at `v` (strict inequality) and
// write the selected one-based indices. `out_indices` needs capacity p.
//
// # Safety
// `model` must be a live handle, `out_indices` must have room for p
// indices, and `out_len` must be writable.
enum RkhsSparseStatus rkhs_sparse_model_select(const struct RkhsSparseModel *model,
                                               double v,
                                               uintptr_t *out_indices,
                                               uintptr_t *out_len);

// Cohen's kappa between two sets of one-based indices inside 1..=p.
//
// # Safety
// `a` and `b` must point to `a_len` and `b_len` readable indices (null is
// allowed for empty sets) and `out` must be writable.
enum RkhsSparseStatus rkhs_sparse_cohen_kappa(const uintptr_t *a,
                                              uintptr_t a_len,
                                              const uintptr_t *b,
                                              uintptr_t b_len,
                                              uintptr_t p,
                                              double *out);

// Length of the built-in tuning grid.
uintptr_t rkhs_sparse_default_grid_len(void);

// Fill `out` with the built-in tuning grid (`rkhs_sparse_default_grid_len`
// values).
//
// # Safety
// `out` must point to at least `rkhs_sparse_default_grid_len()` writable
// doubles.
enum RkhsSparseStatus rkhs_sparse_default_grid(double *out);

// Full pipeline: tune (lambda, v) by selection stability on random
// half-splits, refit on the whole sample, and return the selection.
//
// Pass null/0 grids to use the built-in grid. `out_indices` needs capacity
// p; the selected one-based indices and their count are written out along
// with the chosen pair.
//
// # Safety
// Pointer arguments must satisfy the same contracts as in
// `rkhs_sparse_fit`; `out_lambda`, `out_v`, and `out_len` must be writable
// and `out_indices` must have room for p indices.
enum RkhsSparseStatus rkhs_sparse_tune(const double *x,
                                       uintptr_t n,
                                       uintptr_t p,
                                       const double *y,
                                       const char *loss,
                                       double tau,
                                       double epsilon,
                                       const double *lambda_grid,
                                       uintptr_t lambda_grid_len,
                                       const double *v_grid,
                                       uintptr_t v_grid_len,
                                       uintptr_t splits,
                                       double q_fraction,
                                       uint64_t seed,
                                       double *out_lambda,
                                       double *out_v,
                                       uintptr_t *out_indices,
                                       uintptr_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
