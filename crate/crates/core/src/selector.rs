//! Per-coordinate empirical gradient norms of a fitted model and the
//! hard-thresholding step that turns them into an estimated active set.
//!
//! The score for coordinate `l` is the empirical squared norm of the fitted
//! partial derivative, `(1/m) sum_j g_l(x_j)^2` with
//! `g_l(x_j) = sum_i alpha_i K(x_i, x_j) (x_i^l - x_j^l) / sigma^2`.

use crate::error::{Error, Result};
use crate::estimator::FittedModel;
use crate::kernel::cross_gram;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

/// Coordinates are processed in blocks of this many columns so peak memory
/// stays at O(n * block) regardless of p.
const COORD_BLOCK: usize = 128;

/// Empirical squared gradient norms, one per predictor coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientScores {
    scores: Vec<f64>,
    n_eval: usize,
}

impl GradientScores {
    /// Wrap an externally computed score vector (values must be
    /// nonnegative and finite) so it can flow through [`select`].
    pub fn from_raw(scores: Vec<f64>, n_eval: usize) -> Self {
        debug_assert!(scores.iter().all(|s| *s >= 0.0 && s.is_finite()));
        GradientScores { scores, n_eval }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Number of evaluation points the empirical norm averaged over.
    pub fn n_eval(&self) -> usize {
        self.n_eval
    }

    pub fn p(&self) -> usize {
        self.scores.len()
    }

    /// Scores divided by the maximum score (all zeros if the max is 0).
    pub fn max_normalized(&self) -> Vec<f64> {
        let max = self.scores.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 {
            self.scores.iter().map(|s| s / max).collect()
        } else {
            vec![0.0; self.scores.len()]
        }
    }
}

/// Coordinates whose score strictly exceeds the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    indices: Vec<usize>,
    threshold: f64,
}

impl ActiveSet {
    /// Build from already-selected zero-based indices (sorted, deduplicated).
    pub fn from_indices(mut indices: Vec<usize>, threshold: f64) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet { indices, threshold }
    }

    /// Zero-based member indices, sorted ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// One-based indices for user-facing output.
    pub fn indices_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Empirical squared gradient norms of the fitted function.
///
/// `x_eval` defaults to the training sample, matching the empirical norm
/// used for selection; pass a held-out matrix for diagnostics.
pub fn gradient_scores(
    model: &FittedModel,
    x_eval: Option<&ArrayView2<f64>>,
) -> Result<GradientScores> {
    let train = model.train_x();
    let eval = match x_eval {
        Some(e) => {
            if e.ncols() != train.ncols() {
                return Err(Error::DimensionMismatch {
                    context: "gradient_scores eval matrix",
                    expected: train.ncols(),
                    actual: e.ncols(),
                });
            }
            e.to_owned()
        }
        None => train.to_owned(),
    };
    let cross = cross_gram(&train, &eval.view(), model.sigma())?;
    Ok(scores_from_cross_gram(model, &cross, &eval.view()))
}

/// Score computation from a precomputed cross-kernel matrix
/// (entry (i, j) = K(train_i, eval_j)). Hot path for stability tuning,
/// where the same Gram matrix serves every lambda.
pub(crate) fn scores_from_cross_gram(
    model: &FittedModel,
    cross: &Array2<f64>,
    eval: &ArrayView2<f64>,
) -> GradientScores {
    let train = model.train_x();
    let alpha = model.alpha();
    let m = eval.nrows();
    let p = train.ncols();
    let inv_s2 = 1.0 / (model.sigma() * model.sigma());

    // w_j = sum_i alpha_i K(x_i, e_j), shared by every coordinate
    let w = cross.t().dot(&alpha);

    let blocks: Vec<(usize, usize)> = (0..p)
        .step_by(COORD_BLOCK)
        .map(|s| (s, (s + COORD_BLOCK).min(p)))
        .collect();

    let per_block: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|&(start, end)| {
            // The derivative factor (x_i^l - e_j^l) is shift-invariant, so
            // columns are centered on their first training value; a constant
            // coordinate then contributes exact zeros instead of rounding
            // residue from the rearranged products.
            let shifts: Vec<f64> = (start..end).map(|c| train[[0, c]]).collect();
            // A_{il} = alpha_i * (X_{il} - shift_l)
            let cols = train.slice_axis(Axis(1), (start..end).into());
            let mut a = cols.to_owned();
            for (i, mut row) in a.rows_mut().into_iter().enumerate() {
                for (l, v) in row.iter_mut().enumerate() {
                    *v = alpha[i] * (*v - shifts[l]);
                }
            }
            // U_{lj} = sum_i alpha_i (X_{il} - shift_l) K(x_i, e_j)
            let u = a.t().dot(cross);
            (0..(end - start))
                .map(|l| {
                    let col = start + l;
                    let shift = shifts[l];
                    let mut acc = 0.0;
                    for ((&ul, &ej), &wj) in
                        u.row(l).iter().zip(eval.column(col).iter()).zip(w.iter())
                    {
                        let g = (ul - (ej - shift) * wj) * inv_s2;
                        acc += g * g;
                    }
                    acc / m as f64
                })
                .collect()
        })
        .collect();

    GradientScores {
        scores: per_block.into_iter().flatten().collect(),
        n_eval: m,
    }
}

/// Hard-threshold: keep coordinates with score strictly greater than `v`.
/// Ties at exactly `v` are excluded.
pub fn select(scores: &GradientScores, v: f64) -> Result<ActiveSet> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {v}"
        )));
    }
    let indices = scores
        .scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > v)
        .map(|(i, _)| i)
        .collect();
    Ok(ActiveSet {
        indices,
        threshold: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{fit, SolverOptions};
    use crate::kernel::BandwidthConfig;
    use crate::loss::Loss;
    use ndarray::{array, Array1, Array2};
    use rand::Rng;

    fn fitted(n: usize, p: usize, seed: u64) -> (Array2<f64>, FittedModel) {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
        let m = fit(
            &x.view(),
            &y.view(),
            Loss::Square,
            0.05,
            &BandwidthConfig::MedianHeuristic,
            &SolverOptions::default(),
        )
        .unwrap();
        (x, m)
    }

    /// Finite-difference oracle on predict, independent of the analytic path.
    fn fd_scores(model: &FittedModel, eval: &Array2<f64>, h: f64) -> Vec<f64> {
        let m = eval.nrows();
        let p = eval.ncols();
        (0..p)
            .map(|l| {
                let mut acc = 0.0;
                for j in 0..m {
                    let mut plus = eval.row(j).to_owned();
                    let mut minus = plus.clone();
                    plus[l] += h;
                    minus[l] -= h;
                    let fp = model
                        .predict(&plus.insert_axis(ndarray::Axis(0)).view())
                        .unwrap()[0];
                    let fm = model
                        .predict(&minus.insert_axis(ndarray::Axis(0)).view())
                        .unwrap()[0];
                    let g = (fp - fm) / (2.0 * h);
                    acc += g * g;
                }
                acc / m as f64
            })
            .collect()
    }

    #[test]
    fn zero_alpha_gives_zero_scores() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let y = array![0.0, 0.0, 0.0];
        let m = fit(
            &x.view(),
            &y.view(),
            Loss::Square,
            1.0,
            &BandwidthConfig::MedianHeuristic,
            &SolverOptions::default(),
        )
        .unwrap();
        // y = 0 forces alpha = 0 exactly in the closed form
        let s = gradient_scores(&m, None).unwrap();
        assert!(s.scores().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_point_scores_are_zero() {
        let x = array![[0.3, -0.2]];
        let y = array![1.5];
        let m = fit(
            &x.view(),
            &y.view(),
            Loss::Square,
            0.5,
            &BandwidthConfig::Fixed(1.0),
            &SolverOptions::default(),
        )
        .unwrap();
        let s = gradient_scores(&m, None).unwrap();
        assert_eq!(s.scores(), &[0.0, 0.0]);
    }

    #[test]
    fn scores_match_finite_difference_oracle() {
        let (x, m) = fitted(12, 4, 21);
        let s = gradient_scores(&m, None).unwrap();
        let fd = fd_scores(&m, &x, 1e-4);
        for (l, (got, want)) in s.scores().iter().zip(fd.iter()).enumerate() {
            let denom = want.abs().max(1e-10);
            assert!(
                (got - want).abs() / denom < 1e-4,
                "coord {l}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn held_out_eval_matches_oracle() {
        let (_, m) = fitted(10, 3, 22);
        let mut rng = crate::rng::stream_rng(23, 0);
        let eval = Array2::from_shape_fn((7, 3), |_| rng.random_range(-1.0..1.0));
        let s = gradient_scores(&m, Some(&eval.view())).unwrap();
        assert_eq!(s.n_eval(), 7);
        let fd = fd_scores(&m, &eval, 1e-4);
        for (got, want) in s.scores().iter().zip(fd.iter()) {
            assert!((got - want).abs() / want.abs().max(1e-10) < 1e-4);
        }
    }

    #[test]
    fn constant_coordinate_scores_exactly_zero() {
        let mut rng = crate::rng::stream_rng(24, 0);
        let mut x = Array2::from_shape_fn((9, 3), |_| rng.random_range(-1.0..1.0));
        x.column_mut(1).fill(0.7);
        let y = Array1::from_shape_fn(9, |_| rng.random_range(-1.0..1.0));
        let m = fit(
            &x.view(),
            &y.view(),
            Loss::Square,
            0.1,
            &BandwidthConfig::MedianHeuristic,
            &SolverOptions::default(),
        )
        .unwrap();
        let s = gradient_scores(&m, None).unwrap();
        assert_eq!(s.scores()[1], 0.0);
        assert!(s.scores()[0] > 0.0);
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = crate::rng::stream_rng(25, 0);
        let x = Array2::from_shape_fn((10, 4), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(10, |_| rng.random_range(-1.0..1.0));
        let perm = [2usize, 0, 3, 1];
        let mut xp = Array2::<f64>::zeros((10, 4));
        for (new_col, &old_col) in perm.iter().enumerate() {
            xp.column_mut(new_col).assign(&x.column(old_col));
        }
        let opts = SolverOptions::default();
        let bw = BandwidthConfig::MedianHeuristic;
        let m = fit(&x.view(), &y.view(), Loss::Square, 0.05, &bw, &opts).unwrap();
        let mp = fit(&xp.view(), &y.view(), Loss::Square, 0.05, &bw, &opts).unwrap();
        let s = gradient_scores(&m, None).unwrap();
        let sp = gradient_scores(&mp, None).unwrap();
        for (new_col, &old_col) in perm.iter().enumerate() {
            assert!(
                (s.scores()[old_col] - sp.scores()[new_col]).abs() < 1e-12,
                "column {old_col} -> {new_col}"
            );
        }
    }

    #[test]
    fn select_strict_inequality() {
        let s = GradientScores {
            scores: vec![0.5, 0.01, 0.0],
            n_eval: 3,
        };
        let a = select(&s, 0.1).unwrap();
        assert_eq!(a.indices(), &[0]);
        assert_eq!(a.indices_one_based(), vec![1]);
        // v = 0 keeps every strictly positive score
        assert_eq!(select(&s, 0.0).unwrap().indices(), &[0, 1]);
        // v = max excludes the maximizer
        assert!(select(&s, 0.5).unwrap().is_empty());
    }

    #[test]
    fn select_monotone_in_threshold() {
        let mut rng = crate::rng::stream_rng(26, 0);
        let s = GradientScores {
            scores: (0..20).map(|_| rng.random_range(0.0..1.0)).collect(),
            n_eval: 20,
        };
        let mut prev = select(&s, 0.0).unwrap();
        for v in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let cur = select(&s, v).unwrap();
            assert!(cur.indices().iter().all(|i| prev.contains(*i)));
            prev = cur;
        }
    }

    #[test]
    fn negative_threshold_rejected() {
        let s = GradientScores {
            scores: vec![0.5],
            n_eval: 1,
        };
        assert!(select(&s, -0.1).is_err());
    }
}
