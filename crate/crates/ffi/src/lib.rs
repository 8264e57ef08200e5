//! C ABI for the rkhs-sparse library.
//!
//! Conventions:
//! - Every fallible call returns an [`RkhsSparseStatus`]; on failure a
//!   human-readable message is available from
//!   [`rkhs_sparse_last_error_message`] (thread-local, valid until the next
//!   failing call on the same thread).
//! - Matrices are row-major `f64` buffers of shape n x p.
//! - Fitted models are opaque handles created by [`rkhs_sparse_fit`] and
//!   released with [`rkhs_sparse_model_free`].
//! - Variable indices crossing this boundary are one-based, matching the
//!   CLI reports.

use ndarray::{Array1, Array2};
use rkhs_sparse::{
    cohen_kappa, default_grid, fit, gradient_scores, select, BandwidthConfig, Error, FittedModel,
    GradientScores, Loss, SolverOptions, TuneOptions,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkhsSparseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Utf8Error = 3,
    NumericalFailure = 4,
}

/// Opaque fitted-model handle.
pub struct RkhsSparseModel {
    inner: FittedModel,
    scores: RefCell<Option<GradientScores>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|c| {
        *c.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_from(err: &Error) -> RkhsSparseStatus {
    set_error(&err.to_string());
    if err.exit_code() == 2 {
        RkhsSparseStatus::NumericalFailure
    } else {
        RkhsSparseStatus::InvalidArgument
    }
}

fn null_ptr(what: &str) -> RkhsSparseStatus {
    set_error(&format!("null pointer: {what}"));
    RkhsSparseStatus::NullPointer
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn rkhs_sparse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|c| c.borrow().as_ptr())
}

/// Cap worker parallelism (results are identical for every cap). Only the
/// first successful call takes effect.
#[no_mangle]
pub extern "C" fn rkhs_sparse_set_threads(threads: usize) -> RkhsSparseStatus {
    if threads == 0 {
        set_error("thread count must be positive");
        return RkhsSparseStatus::InvalidArgument;
    }
    // route through the same hook the CLI uses
    std::env::set_var(rkhs_sparse::parallel::THREADS_ENV, threads.to_string());
    rkhs_sparse::parallel::init_thread_pool_from_env();
    RkhsSparseStatus::Ok
}

unsafe fn slice_from<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn index_slice_from<'a>(ptr: *const usize, len: usize) -> Option<&'a [usize]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

fn parse_loss(name: &str, tau: f64, epsilon: f64) -> Result<Loss, Error> {
    match name {
        "square" => Ok(Loss::Square),
        "check" => Loss::check(tau),
        "eps" | "eps-insensitive" => Loss::eps_insensitive(epsilon),
        "logistic" => Ok(Loss::Logistic),
        "hinge" => Ok(Loss::Hinge),
        other => Err(Error::InvalidParameter(format!(
            "unknown loss {other:?}; expected square|check|eps|logistic|hinge"
        ))),
    }
}

unsafe fn loss_from_c(
    loss: *const c_char,
    tau: f64,
    epsilon: f64,
) -> Result<Loss, RkhsSparseStatus> {
    if loss.is_null() {
        return Err(null_ptr("loss"));
    }
    let name = CStr::from_ptr(loss).to_str().map_err(|_| {
        set_error("loss name is not valid UTF-8");
        RkhsSparseStatus::Utf8Error
    })?;
    parse_loss(name, tau, epsilon).map_err(|e| status_from(&e))
}

fn matrix_from(x: &[f64], n: usize, p: usize) -> Result<Array2<f64>, Error> {
    let expect = n
        .checked_mul(p)
        .ok_or_else(|| Error::InvalidParameter("n * p overflows".into()))?;
    if x.len() != expect {
        return Err(Error::InvalidParameter(format!(
            "matrix buffer holds {} values, expected {expect}",
            x.len()
        )));
    }
    Array2::from_shape_vec((n, p), x.to_vec()).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Fit a kernel M-estimator.
///
/// `x`: row-major n x p predictor matrix. `y`: length-n responses.
/// `loss`: "square", "check", "eps", "logistic", or "hinge"; `tau` and
/// `epsilon` are read only for "check" and "eps" respectively.
/// `bandwidth` <= 0 selects the median heuristic, a positive value is used
/// as the fixed kernel length-scale. On success `*out_model` owns the model.
///
/// # Safety
/// `x` must point to n*p readable doubles, `y` to n readable doubles,
/// `loss` to a NUL-terminated string, and `out_model` to a writable pointer
/// slot. The returned handle must be released with `rkhs_sparse_model_free`.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_fit(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    loss: *const c_char,
    tau: f64,
    epsilon: f64,
    lambda: f64,
    bandwidth: f64,
    out_model: *mut *mut RkhsSparseModel,
) -> RkhsSparseStatus {
    if out_model.is_null() {
        return null_ptr("out_model");
    }
    let Some(xs) = slice_from(x, n.saturating_mul(p)) else {
        return null_ptr("x");
    };
    let Some(ys) = slice_from(y, n) else {
        return null_ptr("y");
    };
    let loss = match loss_from_c(loss, tau, epsilon) {
        Ok(l) => l,
        Err(s) => return s,
    };
    let xm = match matrix_from(xs, n, p) {
        Ok(m) => m,
        Err(e) => return status_from(&e),
    };
    let yv = Array1::from_vec(ys.to_vec());
    let bw = if bandwidth > 0.0 {
        BandwidthConfig::Fixed(bandwidth)
    } else {
        BandwidthConfig::MedianHeuristic
    };
    match fit(
        &xm.view(),
        &yv.view(),
        loss,
        lambda,
        &bw,
        &SolverOptions::default(),
    ) {
        Ok(model) => {
            let handle = Box::new(RkhsSparseModel {
                inner: model,
                scores: RefCell::new(None),
            });
            *out_model = Box::into_raw(handle);
            RkhsSparseStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a pointer returned by `rkhs_sparse_fit` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_free(model: *mut RkhsSparseModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of training rows (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_n(model: *const RkhsSparseModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n())
}

/// Number of predictor columns (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_p(model: *const RkhsSparseModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.p())
}

/// Fetch model diagnostics. Any out-pointer may be null to skip that field.
///
/// # Safety
/// `model` must be a live model handle; non-null out-pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_stats(
    model: *const RkhsSparseModel,
    out_sigma: *mut f64,
    out_lambda: *mut f64,
    out_objective: *mut f64,
    out_iterations: *mut usize,
    out_converged: *mut bool,
) -> RkhsSparseStatus {
    let Some(m) = model.as_ref() else {
        return null_ptr("model");
    };
    if !out_sigma.is_null() {
        *out_sigma = m.inner.sigma();
    }
    if !out_lambda.is_null() {
        *out_lambda = m.inner.lambda();
    }
    if !out_objective.is_null() {
        *out_objective = m.inner.objective_value();
    }
    if !out_iterations.is_null() {
        *out_iterations = m.inner.solver_iterations();
    }
    if !out_converged.is_null() {
        *out_converged = m.inner.converged();
    }
    RkhsSparseStatus::Ok
}

/// Predict at `m` row-major points of the model's dimension; writes `m`
/// values to `out`.
///
/// # Safety
/// `model` must be a live handle, `x` must point to m*p readable doubles
/// (p = model dimension), and `out` to m writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_predict(
    model: *const RkhsSparseModel,
    x: *const f64,
    m: usize,
    out: *mut f64,
) -> RkhsSparseStatus {
    let Some(handle) = model.as_ref() else {
        return null_ptr("model");
    };
    let p = handle.inner.p();
    let Some(xs) = slice_from(x, m.saturating_mul(p)) else {
        return null_ptr("x");
    };
    if out.is_null() {
        return null_ptr("out");
    }
    let xm = match matrix_from(xs, m, p) {
        Ok(v) => v,
        Err(e) => return status_from(&e),
    };
    match handle.inner.predict(&xm.view()) {
        Ok(preds) => {
            std::ptr::copy_nonoverlapping(preds.as_slice().unwrap().as_ptr(), out, m);
            RkhsSparseStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

fn ensure_scores(handle: &RkhsSparseModel) -> Result<(), Error> {
    if handle.scores.borrow().is_none() {
        let s = gradient_scores(&handle.inner, None)?;
        *handle.scores.borrow_mut() = Some(s);
    }
    Ok(())
}

/// Empirical squared gradient norms on the training sample; writes p values.
///
/// # Safety
/// `model` must be a live handle and `out` must point to p writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_gradient_scores(
    model: *const RkhsSparseModel,
    out: *mut f64,
) -> RkhsSparseStatus {
    let Some(handle) = model.as_ref() else {
        return null_ptr("model");
    };
    if out.is_null() {
        return null_ptr("out");
    }
    if let Err(e) = ensure_scores(handle) {
        return status_from(&e);
    }
    let borrow = handle.scores.borrow();
    let scores = borrow.as_ref().expect("cached above").scores();
    std::ptr::copy_nonoverlapping(scores.as_ptr(), out, scores.len());
    RkhsSparseStatus::Ok
}

/// Threshold the model's gradient scores at `v` (strict inequality) and
/// write the selected one-based indices. `out_indices` needs capacity p.
///
/// # Safety
/// `model` must be a live handle, `out_indices` must have room for p
/// indices, and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_model_select(
    model: *const RkhsSparseModel,
    v: f64,
    out_indices: *mut usize,
    out_len: *mut usize,
) -> RkhsSparseStatus {
    let Some(handle) = model.as_ref() else {
        return null_ptr("model");
    };
    if out_indices.is_null() {
        return null_ptr("out_indices");
    }
    if out_len.is_null() {
        return null_ptr("out_len");
    }
    if let Err(e) = ensure_scores(handle) {
        return status_from(&e);
    }
    let borrow = handle.scores.borrow();
    let active = match select(borrow.as_ref().expect("cached above"), v) {
        Ok(a) => a,
        Err(e) => return status_from(&e),
    };
    let ones = active.indices_one_based();
    std::ptr::copy_nonoverlapping(ones.as_ptr(), out_indices, ones.len());
    *out_len = ones.len();
    RkhsSparseStatus::Ok
}

/// Cohen's kappa between two sets of one-based indices inside 1..=p.
///
/// # Safety
/// `a` and `b` must point to `a_len` and `b_len` readable indices (null is
/// allowed for empty sets) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_cohen_kappa(
    a: *const usize,
    a_len: usize,
    b: *const usize,
    b_len: usize,
    p: usize,
    out: *mut f64,
) -> RkhsSparseStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    let Some(av) = index_slice_from(a, a_len) else {
        return null_ptr("a");
    };
    let Some(bv) = index_slice_from(b, b_len) else {
        return null_ptr("b");
    };
    let to_zero_based = |v: &[usize]| -> Result<Vec<usize>, Error> {
        v.iter()
            .map(|&i| {
                if i >= 1 {
                    Ok(i - 1)
                } else {
                    Err(Error::SetMemberOutOfRange { index: i, p })
                }
            })
            .collect()
    };
    let a0 = match to_zero_based(av) {
        Ok(v) => v,
        Err(e) => return status_from(&e),
    };
    let b0 = match to_zero_based(bv) {
        Ok(v) => v,
        Err(e) => return status_from(&e),
    };
    match cohen_kappa(&a0, &b0, p) {
        Ok(k) => {
            *out = k;
            RkhsSparseStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

/// Length of the built-in tuning grid.
#[no_mangle]
pub extern "C" fn rkhs_sparse_default_grid_len() -> usize {
    default_grid().len()
}

/// Fill `out` with the built-in tuning grid (`rkhs_sparse_default_grid_len`
/// values).
///
/// # Safety
/// `out` must point to at least `rkhs_sparse_default_grid_len()` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn rkhs_sparse_default_grid(out: *mut f64) -> RkhsSparseStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    let g = default_grid();
    std::ptr::copy_nonoverlapping(g.as_ptr(), out, g.len());
    RkhsSparseStatus::Ok
}

/// Full pipeline: tune (lambda, v) by selection stability on random
/// half-splits, refit on the whole sample, and return the selection.
///
/// Pass null/0 grids to use the built-in grid. `out_indices` needs capacity
/// p; the selected one-based indices and their count are written out along
/// with the chosen pair.
///
/// # Safety
/// Pointer arguments must satisfy the same contracts as in
/// `rkhs_sparse_fit`; `out_lambda`, `out_v`, and `out_len` must be writable
/// and `out_indices` must have room for p indices.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn rkhs_sparse_tune(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    loss: *const c_char,
    tau: f64,
    epsilon: f64,
    lambda_grid: *const f64,
    lambda_grid_len: usize,
    v_grid: *const f64,
    v_grid_len: usize,
    splits: usize,
    q_fraction: f64,
    seed: u64,
    out_lambda: *mut f64,
    out_v: *mut f64,
    out_indices: *mut usize,
    out_len: *mut usize,
) -> RkhsSparseStatus {
    let Some(xs) = slice_from(x, n.saturating_mul(p)) else {
        return null_ptr("x");
    };
    let Some(ys) = slice_from(y, n) else {
        return null_ptr("y");
    };
    if out_lambda.is_null() || out_v.is_null() || out_len.is_null() {
        return null_ptr("out_lambda/out_v/out_len");
    }
    if out_indices.is_null() {
        return null_ptr("out_indices");
    }
    let loss = match loss_from_c(loss, tau, epsilon) {
        Ok(l) => l,
        Err(s) => return s,
    };
    let xm = match matrix_from(xs, n, p) {
        Ok(m) => m,
        Err(e) => return status_from(&e),
    };
    let yv = Array1::from_vec(ys.to_vec());
    let lg = match slice_from(lambda_grid, lambda_grid_len) {
        Some([]) | None => default_grid(),
        Some(g) => g.to_vec(),
    };
    let vg = match slice_from(v_grid, v_grid_len) {
        Some([]) | None => default_grid(),
        Some(g) => g.to_vec(),
    };
    let opts = TuneOptions {
        lambda_grid: lg,
        v_grid: vg,
        splits,
        q_fraction,
        seed,
        bandwidth: BandwidthConfig::MedianHeuristic,
        solver: SolverOptions::default(),
    };
    match rkhs_sparse::tune(&xm.view(), &yv.view(), loss, &opts) {
        Ok(rep) => {
            *out_lambda = rep.chosen_lambda;
            *out_v = rep.chosen_v;
            let ones = rep.final_active_set.indices_one_based();
            std::ptr::copy_nonoverlapping(ones.as_ptr(), out_indices, ones.len());
            *out_len = ones.len();
            RkhsSparseStatus::Ok
        }
        Err(e) => status_from(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    /// y = 4 * x1 on a 1-signal, 2-noise layout.
    fn toy_data(n: usize) -> (Vec<f64>, Vec<f64>, usize) {
        let p = 3;
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let a = ((i * 7 % 19) as f64 - 9.0) / 9.0;
            let b = ((i * 5 % 13) as f64 - 6.0) / 6.0;
            let d = ((i * 11 % 17) as f64 - 8.0) / 8.0;
            x.extend_from_slice(&[a, b, d]);
            y.push(4.0 * a);
        }
        (x, y, p)
    }

    #[test]
    fn fit_predict_score_select_round_trip() {
        let (x, y, p) = toy_data(40);
        let loss = c("square");
        let mut model: *mut RkhsSparseModel = ptr::null_mut();
        let status = unsafe {
            rkhs_sparse_fit(
                x.as_ptr(),
                40,
                p,
                y.as_ptr(),
                loss.as_ptr(),
                0.0,
                0.0,
                1e-3,
                0.0,
                &mut model,
            )
        };
        assert_eq!(status, RkhsSparseStatus::Ok);
        assert!(!model.is_null());
        unsafe {
            assert_eq!(rkhs_sparse_model_n(model), 40);
            assert_eq!(rkhs_sparse_model_p(model), 3);

            let mut sigma = 0.0;
            let mut objective = 0.0;
            let mut iters = 0usize;
            let mut converged = false;
            let s = rkhs_sparse_model_stats(
                model,
                &mut sigma,
                ptr::null_mut(),
                &mut objective,
                &mut iters,
                &mut converged,
            );
            assert_eq!(s, RkhsSparseStatus::Ok);
            assert!(sigma > 0.0);
            assert!(converged);

            let mut preds = vec![0.0; 40];
            let s = rkhs_sparse_model_predict(model, x.as_ptr(), 40, preds.as_mut_ptr());
            assert_eq!(s, RkhsSparseStatus::Ok);

            let mut scores = vec![0.0; 3];
            let s = rkhs_sparse_model_gradient_scores(model, scores.as_mut_ptr());
            assert_eq!(s, RkhsSparseStatus::Ok);
            assert!(scores[0] > scores[1].max(scores[2]));

            let mut idx = vec![0usize; 3];
            let mut len = 0usize;
            let s = rkhs_sparse_model_select(model, 0.5, idx.as_mut_ptr(), &mut len);
            assert_eq!(s, RkhsSparseStatus::Ok);
            assert_eq!(&idx[..len], &[1]);

            rkhs_sparse_model_free(model);
        }
    }

    #[test]
    fn null_and_bad_inputs_report_errors() {
        let (x, y, p) = toy_data(10);
        let loss = c("square");
        let status = unsafe {
            rkhs_sparse_fit(
                x.as_ptr(),
                10,
                p,
                y.as_ptr(),
                loss.as_ptr(),
                0.0,
                0.0,
                1e-3,
                0.0,
                ptr::null_mut(),
            )
        };
        assert_eq!(status, RkhsSparseStatus::NullPointer);

        let mut model: *mut RkhsSparseModel = ptr::null_mut();
        let bad_loss = c("huber");
        let status = unsafe {
            rkhs_sparse_fit(
                x.as_ptr(),
                10,
                p,
                y.as_ptr(),
                bad_loss.as_ptr(),
                0.0,
                0.0,
                1e-3,
                0.0,
                &mut model,
            )
        };
        assert_eq!(status, RkhsSparseStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(rkhs_sparse_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("huber"));

        // degenerate data -> numerical failure
        let xz = vec![0.0; 10 * p];
        let status = unsafe {
            rkhs_sparse_fit(
                xz.as_ptr(),
                10,
                p,
                y.as_ptr(),
                loss.as_ptr(),
                0.0,
                0.0,
                1e-3,
                0.0,
                &mut model,
            )
        };
        assert_eq!(status, RkhsSparseStatus::NumericalFailure);
    }

    #[test]
    fn kappa_matches_library() {
        let a = [1usize, 2];
        let b = [1usize, 3];
        let mut out = 0.0;
        let s = unsafe { rkhs_sparse_cohen_kappa(a.as_ptr(), 2, b.as_ptr(), 2, 10, &mut out) };
        assert_eq!(s, RkhsSparseStatus::Ok);
        assert!((out - 0.375).abs() < 1e-12);
    }

    #[test]
    fn default_grid_round_trip() {
        let len = rkhs_sparse_default_grid_len();
        assert_eq!(len, 61);
        let mut g = vec![0.0; len];
        let s = unsafe { rkhs_sparse_default_grid(g.as_mut_ptr()) };
        assert_eq!(s, RkhsSparseStatus::Ok);
        assert!((g[0] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn tune_runs_end_to_end_on_small_grids() {
        let (x, y, p) = toy_data(60);
        let loss = c("square");
        let lambda_grid = [1e-3, 1e-2];
        let v_grid = [1e-3, 1e-1, 10.0];
        let mut out_lambda = 0.0;
        let mut out_v = 0.0;
        let mut idx = vec![0usize; p];
        let mut len = 0usize;
        let s = unsafe {
            rkhs_sparse_tune(
                x.as_ptr(),
                60,
                p,
                y.as_ptr(),
                loss.as_ptr(),
                0.0,
                0.0,
                lambda_grid.as_ptr(),
                2,
                v_grid.as_ptr(),
                3,
                8,
                0.9,
                7,
                &mut out_lambda,
                &mut out_v,
                idx.as_mut_ptr(),
                &mut len,
            )
        };
        assert_eq!(s, RkhsSparseStatus::Ok);
        assert!(len >= 1);
        assert_eq!(idx[0], 1);
    }
}
