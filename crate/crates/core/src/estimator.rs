//! Regularized kernel M-estimation over representer coefficients.
//!
//! Minimizes `J(alpha) = (1/n) sum_i L(y_i, (K alpha)_i) + lambda alphaᵀ K alpha`.
//! Square loss has the closed form `alpha = (K + n lambda I)^-1 y`; logistic
//! (and square when forced iterative) uses backtracking gradient descent;
//! the nonsmooth losses use subgradient descent with a decaying step and
//! tail-averaging of the final iterates.

use crate::error::{Error, Result};
use crate::kernel::{cross_gram, gram, BandwidthConfig, GramMatrix};
use crate::linalg::{spectral_norm, Cholesky};
use crate::loss::Loss;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Iterative-solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Iteration cap for the first-order schemes.
    pub max_iter: usize,
    /// Relative objective-decrease threshold for termination.
    pub tol: f64,
    /// Use the iterative scheme even for square loss (closed form otherwise).
    pub force_iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 10_000,
            tol: 1e-8,
            force_iterative: false,
        }
    }
}

/// A fitted kernel M-estimator. Immutable after construction.
#[derive(Debug, Clone)]
pub struct FittedModel {
    train_x: Array2<f64>,
    alpha: Array1<f64>,
    sigma: f64,
    lambda: f64,
    loss: Loss,
    objective_value: f64,
    solver_iterations: usize,
    converged: bool,
}

impl FittedModel {
    pub fn n(&self) -> usize {
        self.train_x.nrows()
    }

    pub fn p(&self) -> usize {
        self.train_x.ncols()
    }

    pub fn train_x(&self) -> ArrayView2<'_, f64> {
        self.train_x.view()
    }

    /// Representer coefficients.
    pub fn alpha(&self) -> ArrayView1<'_, f64> {
        self.alpha.view()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn objective_value(&self) -> f64 {
        self.objective_value
    }

    pub fn solver_iterations(&self) -> usize {
        self.solver_iterations
    }

    /// False when the iterative solver hit its iteration cap; the model is
    /// still usable, callers decide whether to warn.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Predictions `f(x) = sum_i alpha_i K(x_i, x)` at the rows of `x_eval`.
    pub fn predict(&self, x_eval: &ArrayView2<f64>) -> Result<Array1<f64>> {
        if x_eval.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "predict eval matrix",
                expected: self.p(),
                actual: x_eval.ncols(),
            });
        }
        let c = cross_gram(&self.train_x.view(), x_eval, self.sigma)?;
        Ok(c.t().dot(&self.alpha))
    }

    /// Recompute the fitted objective on the given sample (normally the
    /// training sample): empirical risk at the model's predictions plus the
    /// RKHS penalty `lambda alphaᵀ K alpha` over the training points.
    pub fn objective(&self, x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<f64> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "objective response",
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        let preds = self.predict(x)?;
        let emp = empirical_risk(&self.loss, y, &preds.view());
        let k = gram(&self.train_x.view(), self.sigma)?;
        let kalpha = k.entries().dot(&self.alpha);
        Ok(emp + self.lambda * self.alpha.dot(&kalpha))
    }
}

fn empirical_risk(loss: &Loss, y: &ArrayView1<f64>, preds: &ArrayView1<f64>) -> f64 {
    let n = y.len() as f64;
    y.iter()
        .zip(preds.iter())
        .map(|(&yi, &ti)| loss.value(yi, ti))
        .sum::<f64>()
        / n
}

/// Fit the regularized M-estimator on `(x, y)`.
pub fn fit(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    lambda: f64,
    bw: &BandwidthConfig,
    opts: &SolverOptions,
) -> Result<FittedModel> {
    if x.nrows() == 0 {
        return Err(Error::InvalidParameter("empty training sample".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "fit response",
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    loss.validate_labels(y.iter())?;
    let sigma = bw.resolve(x)?;
    let k = gram(x, sigma)?;
    fit_with_gram(x, y, loss, lambda, &k, opts)
}

/// Fit reusing a precomputed Gram matrix (hot path for grid tuning).
pub(crate) fn fit_with_gram(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    lambda: f64,
    k: &GramMatrix,
    opts: &SolverOptions,
) -> Result<FittedModel> {
    let solved = if loss == Loss::Square && !opts.force_iterative {
        solve_square_closed_form(k.entries(), y, lambda)?
    } else if loss.is_smooth() {
        solve_gradient_descent(k.entries(), y, &loss, lambda, opts)?
    } else {
        solve_subgradient(k.entries(), y, &loss, lambda, opts)?
    };

    let t = k.entries().dot(&solved.alpha);
    let objective_value = empirical_risk(&loss, y, &t.view()) + lambda * solved.alpha.dot(&t);
    if !objective_value.is_finite() {
        return Err(Error::SolverDiverged(solved.iterations));
    }
    Ok(FittedModel {
        train_x: x.to_owned(),
        alpha: solved.alpha,
        sigma: k.bandwidth(),
        lambda,
        loss,
        objective_value,
        solver_iterations: solved.iterations,
        converged: solved.converged,
    })
}

struct Solved {
    alpha: Array1<f64>,
    iterations: usize,
    converged: bool,
}

fn solve_square_closed_form(k: &Array2<f64>, y: &ArrayView1<f64>, lambda: f64) -> Result<Solved> {
    let n = k.nrows();
    let ridge = n as f64 * lambda;
    let mut a = k.clone();
    for i in 0..n {
        a[[i, i]] += ridge;
    }
    let factor = match Cholesky::new(&a) {
        Some(f) => f,
        None => {
            // one-shot jitter: 1e-10 * trace(K) / n, and trace(K) = n
            for i in 0..n {
                a[[i, i]] += 1e-10;
            }
            Cholesky::new(&a).ok_or(Error::SolverDiverged(0))?
        }
    };
    Ok(Solved {
        alpha: factor.solve(&y.to_owned()),
        iterations: 0,
        converged: true,
    })
}

/// Objective pieces tracked incrementally by the smooth solver.
fn objective_from_parts(
    loss: &Loss,
    y: &ArrayView1<f64>,
    t: &Array1<f64>,
    lambda: f64,
    penalty: f64,
) -> f64 {
    empirical_risk(loss, y, &t.view()) + lambda * penalty
}

/// Upper bound on the second derivative of the loss in its prediction
/// argument; defined for the smooth losses only.
fn curvature_bound(loss: &Loss) -> f64 {
    match loss {
        Loss::Square => 2.0,
        Loss::Logistic => 0.25 * std::f64::consts::LOG2_E,
        _ => unreachable!("curvature bound is only used for smooth losses"),
    }
}

/// Backtracking descent along the RKHS gradient direction
/// `z = d/n + 2 lambda alpha` (with `d_i = L'(y_i, t_i)`), whose coefficient
/// form follows from the kernel sections representing the empirical-risk
/// gradient. The plain coefficient-space gradient `K z` conditions like K
/// squared and stalls on near-singular Gram matrices; along `z` the rate is
/// governed by `2 lambda + c_L ||K|| / n` instead and is insensitive to K's
/// small eigenvalues.
fn solve_gradient_descent(
    k: &Array2<f64>,
    y: &ArrayView1<f64>,
    loss: &Loss,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Solved> {
    let n = k.nrows();
    let n_f = n as f64;
    let k_norm = spectral_norm(k).max(f64::MIN_POSITIVE);
    // curvature of J along z-directions in the RKHS metric
    let step0 = 1.0 / (curvature_bound(loss) * k_norm / n_f + 2.0 * lambda);

    let mut alpha = Array1::<f64>::zeros(n);
    let mut t = Array1::<f64>::zeros(n); // K alpha
    let mut penalty = 0.0; // alphaᵀ K alpha
    let mut obj = objective_from_parts(loss, y, &t, lambda, penalty);

    for iter in 1..=opts.max_iter {
        let z = Array1::from_iter(
            y.iter()
                .zip(t.iter())
                .zip(alpha.iter())
                .map(|((&yi, &ti), &ai)| loss.subgradient(yi, ti) / n_f + 2.0 * lambda * ai),
        );
        let kz = k.dot(&z); // the coefficient-space gradient of J
        let zkz = z.dot(&kz); // directional slope <grad J, z> >= 0
        if zkz <= 0.0 {
            return Ok(Solved {
                alpha,
                iterations: iter,
                converged: true,
            });
        }

        let z_t = z.dot(&t); // zᵀ K alpha

        let mut step = step0;
        let mut accepted = None;
        for _ in 0..60 {
            let t_trial = &t - &(step * &kz);
            let pen_trial = penalty - 2.0 * step * z_t + step * step * zkz;
            let obj_trial = objective_from_parts(loss, y, &t_trial, lambda, pen_trial);
            if obj_trial <= obj - 1e-4 * step * zkz {
                accepted = Some((t_trial, pen_trial, obj_trial));
                break;
            }
            step *= 0.5;
        }
        let (t_new, pen_new, obj_new) = match accepted {
            Some(v) => v,
            // z is a descent direction, so exhausting the backtracking
            // means numerical stationarity
            None => {
                return Ok(Solved {
                    alpha,
                    iterations: iter,
                    converged: true,
                })
            }
        };

        alpha = &alpha - &(step * &z);
        if !obj_new.is_finite() {
            return Err(Error::SolverDiverged(iter));
        }
        let rel = (obj - obj_new) / obj.abs().max(f64::MIN_POSITIVE);
        if iter % 50 == 0 {
            // resync the cached products against accumulated rounding
            t = k.dot(&alpha);
            penalty = alpha.dot(&t);
            obj = objective_from_parts(loss, y, &t, lambda, penalty);
        } else {
            t = t_new;
            penalty = pen_new;
            obj = obj_new;
        }
        if rel < opts.tol && iter > 1 {
            return Ok(Solved {
                alpha,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(Solved {
        alpha,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Subgradient descent along the RKHS subgradient `z = d/n + 2 lambda alpha`
/// with step `c / sqrt(iter)`, returning the best tail-averaged iterate.
///
/// The step constant is `n / ||K||` (the reciprocal of the mean kernel row
/// sum scale), capped at `1/(2 lambda)` so the penalty part of the update
/// stays contractive for any lambda on the tuning grid. The averaging
/// window is the last 25% of iterations, snapped to 100-iteration blocks.
fn solve_subgradient(
    k: &Array2<f64>,
    y: &ArrayView1<f64>,
    loss: &Loss,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<Solved> {
    const CHECK: usize = 100;
    const RESYNC: usize = 50;
    let n = k.nrows();
    let n_f = n as f64;
    let k_norm = spectral_norm(k).max(f64::MIN_POSITIVE);
    let c = n_f / k_norm;
    let step_cap = 1.0 / (2.0 * lambda);

    let mut alpha = Array1::<f64>::zeros(n);
    let mut t = Array1::<f64>::zeros(n); // K alpha, updated incrementally

    let mut block_sums: Vec<Array1<f64>> = Vec::new();
    let mut current_block = Array1::<f64>::zeros(n);

    let mut best_obj = f64::INFINITY;
    let mut best_alpha = alpha.clone();
    let mut prev_best = f64::INFINITY;
    let mut stalled_checks = 0usize;
    let mut checks = 0usize;

    for iter in 1..=opts.max_iter {
        let z = Array1::from_iter(
            y.iter()
                .zip(t.iter())
                .zip(alpha.iter())
                .map(|((&yi, &ti), &ai)| loss.subgradient(yi, ti) / n_f + 2.0 * lambda * ai),
        );
        let kz = k.dot(&z);
        let step = (c / (iter as f64).sqrt()).min(step_cap);
        alpha = &alpha - &(step * &z);
        if iter % RESYNC == 0 {
            t = k.dot(&alpha);
        } else {
            t = &t - &(step * &kz);
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverDiverged(iter));
        }
        current_block += &alpha;

        if iter % CHECK == 0 {
            block_sums.push(std::mem::replace(&mut current_block, Array1::zeros(n)));
            checks += 1;

            let total_blocks = block_sums.len();
            let tail_blocks = total_blocks.div_ceil(4); // 25% window
            let mut tail_sum = Array1::<f64>::zeros(n);
            for b in &block_sums[total_blocks - tail_blocks..] {
                tail_sum += b;
            }
            let avg = tail_sum / (tail_blocks * CHECK) as f64;
            let t_avg = k.dot(&avg);
            let obj = objective_from_parts(loss, y, &t_avg, lambda, avg.dot(&t_avg));
            if !obj.is_finite() {
                return Err(Error::SolverDiverged(iter));
            }
            if obj < best_obj {
                best_obj = obj;
                best_alpha = avg;
            }
            // best_obj is monotone, so this decrease is always >= 0; two
            // consecutive stalled checks mean a genuine plateau rather
            // than one noisy up-tick of the averaged iterate
            let rel = (prev_best - best_obj) / prev_best.abs().max(f64::MIN_POSITIVE);
            prev_best = best_obj;
            if rel < opts.tol {
                stalled_checks += 1;
            } else {
                stalled_checks = 0;
            }
            if checks >= 3 && stalled_checks >= 2 {
                return Ok(Solved {
                    alpha: best_alpha,
                    iterations: iter,
                    converged: true,
                });
            }
        }
    }

    if best_obj.is_infinite() {
        // fewer than CHECK iterations ran; fall back to the last iterate
        best_alpha = alpha;
    }
    Ok(Solved {
        alpha: best_alpha,
        iterations: opts.max_iter,
        converged: false,
    })
}
