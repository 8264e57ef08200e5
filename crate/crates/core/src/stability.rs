//! Kappa-based selection-stability tuning.
//!
//! The training sample is split in half B times; each half is fitted and
//! thresholded independently, and the agreement between the two selections
//! is measured by Cohen's kappa. Averaging over splits gives the stability
//! `s_hat(lambda, v)`; the threshold rule keeps the largest v whose
//! stability stays within a fraction `q` of the per-lambda maximum, and the
//! lambda maximizing the resulting stability wins (ties to the smaller one).

use crate::error::{Error, Result};
use crate::estimator::{fit_with_gram, FittedModel, SolverOptions};
use crate::kernel::{gram, BandwidthConfig, GramMatrix};
use crate::loss::Loss;
use crate::rng::stream_rng;
use crate::selector::{scores_from_cross_gram, select, ActiveSet, GradientScores};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;

/// Random half-split plan: `replications` disjoint 50/50 partitions drawn
/// without replacement, all derived from `seed`.
#[derive(Debug, Clone, Copy)]
pub struct SplitPlan {
    pub seed: u64,
    pub replications: usize,
}

/// Everything `tune` needs besides the data and the loss.
#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub lambda_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub splits: usize,
    pub q_fraction: f64,
    pub seed: u64,
    pub bandwidth: BandwidthConfig,
    pub solver: SolverOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            lambda_grid: default_grid(),
            v_grid: default_grid(),
            splits: 20,
            q_fraction: 0.9,
            seed: 0,
            bandwidth: BandwidthConfig::MedianHeuristic,
            solver: SolverOptions::default(),
        }
    }
}

/// The tuning grid `{10^(-3 + 0.1 s) : s = 0, ..., 60}`.
pub fn default_grid() -> Vec<f64> {
    (0..=60)
        .map(|s| 10f64.powf(-3.0 + 0.1 * s as f64))
        .collect()
}

/// Outcome of a full stability tuning run.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub lambda_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// Averaged kappa per (lambda, v), indexed `s_hat[li][vi]`.
    pub s_hat: Vec<Vec<f64>>,
    pub chosen_lambda: f64,
    pub chosen_v: f64,
    pub q_fraction: f64,
    /// Selection from the full-sample refit at the chosen pair.
    pub final_active_set: ActiveSet,
    pub final_scores: GradientScores,
    /// Bandwidth of the full-sample refit.
    pub bandwidth: f64,
    pub warnings: Vec<String>,
}

/// Cohen's kappa between two index sets inside {0, ..., p-1}.
///
/// Returns 0 by convention when chance agreement is exact (both sets empty
/// or both full), since such selections carry no stability evidence.
pub fn cohen_kappa(a1: &[usize], a2: &[usize], p: usize) -> Result<f64> {
    let mut in1 = vec![false; p];
    let mut in2 = vec![false; p];
    for &i in a1 {
        *in1.get_mut(i)
            .ok_or(Error::SetMemberOutOfRange { index: i + 1, p })? = true;
    }
    for &i in a2 {
        *in2.get_mut(i)
            .ok_or(Error::SetMemberOutOfRange { index: i + 1, p })? = true;
    }
    let mut n11 = 0usize;
    let mut n12 = 0usize;
    let mut n21 = 0usize;
    let mut n22 = 0usize;
    for l in 0..p {
        match (in1[l], in2[l]) {
            (true, true) => n11 += 1,
            (true, false) => n12 += 1,
            (false, true) => n21 += 1,
            (false, false) => n22 += 1,
        }
    }
    Ok(kappa_from_counts(n11, n12, n21, n22, p))
}

fn kappa_from_counts(n11: usize, n12: usize, n21: usize, n22: usize, p: usize) -> f64 {
    // clear the p and p^2 denominators so the quotient is formed from exact
    // integers and rounds once: (Pr(a) - Pr(e)) / (1 - Pr(e))
    let (n11, n12, n21, n22, p) = (
        n11 as i128,
        n12 as i128,
        n21 as i128,
        n22 as i128,
        p as i128,
    );
    let chance = (n11 + n12) * (n11 + n21) + (n12 + n22) * (n21 + n22);
    let num = p * (n11 + n22) - chance;
    let den = p * p - chance;
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Deterministic Fisher-Yates partition of `0..n` into two halves of sizes
/// floor(n/2) and ceil(n/2).
fn make_splits(n: usize, plan: &SplitPlan) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..plan.replications)
        .map(|b| {
            let mut rng = stream_rng(plan.seed, b as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            let half = n / 2;
            let first = idx[..half].to_vec();
            let second = idx[half..].to_vec();
            (first, second)
        })
        .collect()
}

fn take_rows(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    rows: &[usize],
) -> (Array2<f64>, Array1<f64>) {
    let p = x.ncols();
    let xs = Array2::from_shape_fn((rows.len(), p), |(i, j)| x[[rows[i], j]]);
    let ys = Array1::from_shape_fn(rows.len(), |i| y[[rows[i]]]);
    (xs, ys)
}

/// One half of a replication with its recomputed bandwidth and Gram matrix.
struct Half {
    x: Array2<f64>,
    y: Array1<f64>,
    gram: GramMatrix,
}

impl Half {
    fn build(x: Array2<f64>, y: Array1<f64>, bw: &BandwidthConfig) -> Result<Half> {
        let sigma = bw.resolve(&x.view())?;
        let gram = gram(&x.view(), sigma)?;
        Ok(Half { x, y, gram })
    }

    fn fit_and_score(
        &self,
        loss: Loss,
        lambda: f64,
        solver: &SolverOptions,
    ) -> Result<(FittedModel, GradientScores)> {
        let model = fit_with_gram(
            &self.x.view(),
            &self.y.view(),
            loss,
            lambda,
            &self.gram,
            solver,
        )?;
        let scores = scores_from_cross_gram(&model, self.gram.entries(), &self.x.view());
        Ok((model, scores))
    }
}

struct GridOutcome {
    /// Averaged kappa per (lambda, v) over the successful replications.
    s_hat: Vec<Vec<f64>>,
    /// Successful replication count per lambda.
    usable: Vec<usize>,
    warnings: Vec<String>,
}

/// Shared splits across the whole grid: the expensive fits and scores are
/// computed once per (lambda, replication, half) and swept over v for free.
#[allow(clippy::too_many_arguments)]
fn stability_grid(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    lambdas: &[f64],
    vs: &[f64],
    plan: &SplitPlan,
    bw: &BandwidthConfig,
    solver: &SolverOptions,
) -> Result<GridOutcome> {
    let n = x.nrows();
    let p = x.ncols();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "stability estimation needs at least 4 rows, got {n}"
        )));
    }
    if plan.replications == 0 {
        return Err(Error::InvalidParameter(
            "replication count must be positive".into(),
        ));
    }
    let mut warnings = Vec::new();

    let splits = make_splits(n, plan);
    let halves: Vec<std::result::Result<(Half, Half), String>> = splits
        .par_iter()
        .map(|(first, second)| {
            let (x1, y1) = take_rows(x, y, first);
            let (x2, y2) = take_rows(x, y, second);
            let h1 = Half::build(x1, y1, bw).map_err(|e| e.to_string())?;
            let h2 = Half::build(x2, y2, bw).map_err(|e| e.to_string())?;
            Ok((h1, h2))
        })
        .collect();

    let mut live: Vec<(usize, &(Half, Half))> = Vec::new();
    for (b, h) in halves.iter().enumerate() {
        match h {
            Ok(pair) => live.push((b, pair)),
            Err(msg) => warnings.push(format!("replication {} skipped: {}", b + 1, msg)),
        }
    }
    if live.is_empty() {
        return Err(Error::AllReplicationsFailed(plan.replications));
    }

    // one job per (lambda, live replication)
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|li| (0..live.len()).map(move |bi| (li, bi)))
        .collect();

    let results: Vec<std::result::Result<Vec<f64>, String>> = jobs
        .par_iter()
        .map(|&(li, bi)| {
            let lambda = lambdas[li];
            let (h1, h2) = live[bi].1;
            let (_, s1) = h1
                .fit_and_score(loss, lambda, solver)
                .map_err(|e| e.to_string())?;
            let (_, s2) = h2
                .fit_and_score(loss, lambda, solver)
                .map_err(|e| e.to_string())?;
            Ok(kappa_sweep(s1.scores(), s2.scores(), vs, p))
        })
        .collect();

    let mut s_hat = vec![vec![0.0; vs.len()]; lambdas.len()];
    let mut usable = vec![0usize; lambdas.len()];
    for (job_idx, res) in results.iter().enumerate() {
        let (li, bi) = jobs[job_idx];
        match res {
            Ok(kappas) => {
                usable[li] += 1;
                for (vi, k) in kappas.iter().enumerate() {
                    s_hat[li][vi] += k;
                }
            }
            Err(msg) => warnings.push(format!(
                "replication {} at lambda {:.6e} skipped: {}",
                live[bi].0 + 1,
                lambdas[li],
                msg
            )),
        }
    }
    for li in 0..lambdas.len() {
        if usable[li] == 0 {
            warnings.push(format!(
                "lambda {:.6e}: every replication failed; treated as unstable",
                lambdas[li]
            ));
            continue;
        }
        let c = usable[li] as f64;
        for v in &mut s_hat[li] {
            *v /= c;
        }
    }

    Ok(GridOutcome {
        s_hat,
        usable,
        warnings,
    })
}

fn kappa_sweep(s1: &[f64], s2: &[f64], vs: &[f64], p: usize) -> Vec<f64> {
    vs.iter()
        .map(|&v| {
            let mut n11 = 0usize;
            let mut n12 = 0usize;
            let mut n21 = 0usize;
            let mut n22 = 0usize;
            for l in 0..p {
                match (s1[l] > v, s2[l] > v) {
                    (true, true) => n11 += 1,
                    (true, false) => n12 += 1,
                    (false, true) => n21 += 1,
                    (false, false) => n22 += 1,
                }
            }
            kappa_from_counts(n11, n12, n21, n22, p)
        })
        .collect()
}

/// Averaged selection stability at a single (lambda, v): mean kappa between
/// the two half-sample selections over the plan's replications. Failed
/// replications are excluded from the mean.
#[allow(clippy::too_many_arguments)]
pub fn stability_estimate(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    lambda: f64,
    v: f64,
    plan: &SplitPlan,
    bw: &BandwidthConfig,
    solver: &SolverOptions,
) -> Result<f64> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {v}"
        )));
    }
    let out = stability_grid(x, y, loss, &[lambda], &[v], plan, bw, solver)?;
    if out.usable[0] == 0 {
        return Err(Error::AllReplicationsFailed(plan.replications));
    }
    Ok(out.s_hat[0][0])
}

/// Apply the threshold rule to a stability surface: per lambda, the largest
/// v whose stability stays within fraction `q` of that lambda's maximum;
/// across lambdas, the one with the highest resulting stability (ties go to
/// the smaller lambda). Returns grid indices `(li, vi)`.
pub fn select_stable_pair(s_hat: &[Vec<f64>], q_fraction: f64) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (li, row) in s_hat.iter().enumerate() {
        let row_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if row_max.is_nan() || row_max <= 0.0 {
            continue; // degenerate lambda: no positive stability anywhere
        }
        let mut vi_chosen = None;
        for (vi, &s) in row.iter().enumerate() {
            if s / row_max >= q_fraction {
                vi_chosen = Some(vi); // keep the largest qualifying v
            }
        }
        let vi = vi_chosen.expect("row max satisfies the rule at q <= 1");
        let score = row[vi];
        let better = match best {
            None => true,
            Some((_, _, s)) => score > s,
        };
        if better {
            best = Some((li, vi, score));
        }
    }
    match best {
        Some((li, vi, _)) => Ok((li, vi)),
        None => Err(Error::NoStableSelection),
    }
}

fn validate_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} grid is empty")));
    }
    if grid.iter().any(|&g| !g.is_finite() || g <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} grid entries must be positive and finite"
        )));
    }
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(format!(
                "{name} grid must be strictly ascending"
            )));
        }
    }
    Ok(())
}

/// Full tuning: stability surface over the grids with shared splits, the
/// threshold rule, and a full-sample refit at the chosen pair.
pub fn tune(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    opts: &TuneOptions,
) -> Result<StabilityReport> {
    validate_grid(&opts.lambda_grid, "lambda")?;
    validate_grid(&opts.v_grid, "v")?;
    if !(opts.q_fraction > 0.0 && opts.q_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "q_fraction must be in (0, 1], got {}",
            opts.q_fraction
        )));
    }
    loss.validate_labels(y.iter())?;

    let plan = SplitPlan {
        seed: opts.seed,
        replications: opts.splits,
    };
    let out = stability_grid(
        x,
        y,
        loss,
        &opts.lambda_grid,
        &opts.v_grid,
        &plan,
        &opts.bandwidth,
        &opts.solver,
    )?;
    let (li, vi) = select_stable_pair(&out.s_hat, opts.q_fraction)?;
    let chosen_lambda = opts.lambda_grid[li];
    let chosen_v = opts.v_grid[vi];

    let mut warnings = out.warnings;
    let sigma = opts.bandwidth.resolve(x)?;
    let full_gram = gram(x, sigma)?;
    let model = fit_with_gram(x, y, loss, chosen_lambda, &full_gram, &opts.solver)?;
    if !model.converged() {
        warnings.push(format!(
            "final fit hit the iteration cap ({})",
            model.solver_iterations()
        ));
    }
    let final_scores = scores_from_cross_gram(&model, full_gram.entries(), x);
    let final_active_set = select(&final_scores, chosen_v)?;

    Ok(StabilityReport {
        lambda_grid: opts.lambda_grid.clone(),
        v_grid: opts.v_grid.clone(),
        s_hat: out.s_hat,
        chosen_lambda,
        chosen_v,
        q_fraction: opts.q_fraction,
        final_active_set,
        final_scores,
        bandwidth: sigma,
        warnings,
    })
}

/// Stability surface and chosen pair, without the full-sample refit.
#[derive(Debug, Clone)]
pub struct GridSummary {
    pub s_hat: Vec<Vec<f64>>,
    pub chosen_lambda: f64,
    pub chosen_v: f64,
    pub warnings: Vec<String>,
}

/// The stability surface plus the chosen pair, skipping the full-sample
/// refit. Backs the CLI `tune` subcommand.
pub fn tune_grid_only(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    loss: Loss,
    opts: &TuneOptions,
) -> Result<GridSummary> {
    validate_grid(&opts.lambda_grid, "lambda")?;
    validate_grid(&opts.v_grid, "v")?;
    if !(opts.q_fraction > 0.0 && opts.q_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "q_fraction must be in (0, 1], got {}",
            opts.q_fraction
        )));
    }
    loss.validate_labels(y.iter())?;
    let plan = SplitPlan {
        seed: opts.seed,
        replications: opts.splits,
    };
    let out = stability_grid(
        x,
        y,
        loss,
        &opts.lambda_grid,
        &opts.v_grid,
        &plan,
        &opts.bandwidth,
        &opts.solver,
    )?;
    let (li, vi) = select_stable_pair(&out.s_hat, opts.q_fraction)?;
    Ok(GridSummary {
        s_hat: out.s_hat,
        chosen_lambda: opts.lambda_grid[li],
        chosen_v: opts.v_grid[vi],
        warnings: out.warnings,
    })
}
