//! Synthetic benchmark scenarios: two data generators (a nonparametric
//! regression and a nonlinear classification), selection-quality metrics,
//! and a replication runner that aggregates them into a table row.

use crate::error::{Error, Result};
use crate::loss::{LabelConvention, Loss};
use crate::rng::{derive_seed, stream_rng};
use crate::selector::ActiveSet;
use crate::stability::{tune, TuneOptions};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Which synthetic scenario to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Regression: five informative coordinates, Gaussian noise.
    Regression1,
    /// Classification: two informative coordinates, Bernoulli labels in {-1, +1}.
    Classification2,
}

#[derive(Debug, Clone, Copy)]
pub struct DgpConfig {
    pub example: Example,
    pub n: usize,
    pub p: usize,
    /// Correlation knob: predictors are (W + eta * U_row) / (1 + eta).
    pub eta: f64,
    pub seed: u64,
}

impl DgpConfig {
    fn validate(&self) -> Result<()> {
        let min_p = match self.example {
            Example::Regression1 => 5,
            Example::Classification2 => 2,
        };
        if self.p < min_p {
            return Err(Error::InvalidParameter(format!(
                "{:?} requires p >= {min_p}, got {}",
                self.example, self.p
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be nonnegative, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// A generated dataset with its truly informative coordinates (zero-based).
#[derive(Debug, Clone)]
pub struct SimData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub true_set: Vec<usize>,
}

fn f2(u: f64) -> f64 {
    2.0 * u + 1.0
}

fn f3(u: f64) -> f64 {
    2.0 * u - 1.0
}

fn f4(u: f64) -> f64 {
    let s = (std::f64::consts::PI * u).sin();
    let c = (std::f64::consts::PI * u).cos();
    0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s
}

fn f5(u: f64) -> f64 {
    let s = (std::f64::consts::PI * u).sin();
    s / (2.0 - s)
}

/// Regression function of the first scenario; uses the first 5 coordinates.
pub fn example1_regression(x: &[f64]) -> f64 {
    8.0 * x[0] + 4.0 * f2(x[1]) * f3(x[2]) + 6.0 * f4(x[3]) + 5.0 * f5(x[4])
}

/// Analytic partial derivative of [`example1_regression`] in `coord`
/// (zero-based); identically zero for coordinates past the fifth.
pub fn example1_partial(x: &[f64], coord: usize) -> f64 {
    let pi = std::f64::consts::PI;
    match coord {
        0 => 8.0,
        1 => 8.0 * f3(x[2]),
        2 => 8.0 * f2(x[1]),
        3 => {
            let s = (pi * x[3]).sin();
            let c = (pi * x[3]).cos();
            6.0 * pi * (0.1 * c - 0.2 * s + 0.6 * s * c - 1.2 * c * c * s + 1.5 * s * s * c)
        }
        4 => {
            let s = (pi * x[4]).sin();
            let c = (pi * x[4]).cos();
            5.0 * 2.0 * pi * c / ((2.0 - s) * (2.0 - s))
        }
        _ => 0.0,
    }
}

/// Conditional logit function of the second scenario; uses the first 2
/// coordinates.
pub fn example2_logit(x: &[f64]) -> f64 {
    let pi = std::f64::consts::PI;
    8.0 * x[0] - pi * (pi * x[0]).cos()
        + 6.0 * x[1]
        + 8.0 * x[1].powi(3)
        + 3.0 * (2.0 * pi * (x[0] - x[1])).sin()
        - 8.0
}

/// Draw the predictor matrix: entry (i, j) = (W_ij + eta * U_i) / (1 + eta)
/// with W and U uniform on `(lo, hi)`.
fn draw_predictors(
    rng: &mut impl Rng,
    n: usize,
    p: usize,
    eta: f64,
    lo: f64,
    hi: f64,
) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let u: f64 = rng.random_range(lo..hi);
        for j in 0..p {
            let w: f64 = rng.random_range(lo..hi);
            x[[i, j]] = (w + eta * u) / (1.0 + eta);
        }
    }
    x
}

/// Regression scenario: uniform predictors on (-0.5, 0.5), additive N(0, 1)
/// noise, true set {1, ..., 5} (one-based).
pub fn gen_example1(cfg: &DgpConfig) -> Result<SimData> {
    if cfg.example != Example::Regression1 {
        return Err(Error::InvalidParameter(
            "gen_example1 called with a classification config".into(),
        ));
    }
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let x = draw_predictors(&mut rng, cfg.n, cfg.p, cfg.eta, -0.5, 0.5);
    let y = Array1::from_shape_fn(cfg.n, |i| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        example1_regression(x.row(i).as_slice().unwrap()) + noise
    });
    Ok(SimData {
        x,
        y,
        true_set: (0..5).collect(),
    })
}

/// Classification scenario: uniform predictors on (0, 1), Bernoulli labels
/// mapped to {-1, +1}, true set {1, 2} (one-based).
pub fn gen_example2(cfg: &DgpConfig) -> Result<SimData> {
    if cfg.example != Example::Classification2 {
        return Err(Error::InvalidParameter(
            "gen_example2 called with a regression config".into(),
        ));
    }
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let x = draw_predictors(&mut rng, cfg.n, cfg.p, cfg.eta, 0.0, 1.0);
    let y = Array1::from_shape_fn(cfg.n, |i| {
        let logit = example2_logit(x.row(i).as_slice().unwrap());
        let prob = 1.0 / (1.0 + (-logit).exp());
        let u: f64 = rng.random_range(0.0..1.0);
        if u < prob {
            1.0
        } else {
            -1.0
        }
    });
    Ok(SimData {
        x,
        y,
        true_set: vec![0, 1],
    })
}

/// Generate under whichever scenario the config names.
pub fn generate(cfg: &DgpConfig) -> Result<SimData> {
    match cfg.example {
        Example::Regression1 => gen_example1(cfg),
        Example::Classification2 => gen_example2(cfg),
    }
}

/// How a selection relates to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitClass {
    /// Exactly the true set.
    Correct,
    /// Missed at least one true coordinate.
    Under,
    /// All true coordinates plus extras.
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionMetrics {
    pub size: usize,
    pub tp: usize,
    pub fp: usize,
    pub fit_class: FitClass,
}

/// Compare a selection against the true coordinate set (both zero-based).
pub fn evaluate_selection(selected: &ActiveSet, true_set: &[usize]) -> SelectionMetrics {
    let tp = selected
        .indices()
        .iter()
        .filter(|i| true_set.contains(i))
        .count();
    let fp = selected.len() - tp;
    let fit_class = if tp < true_set.len() {
        FitClass::Under
    } else if fp == 0 {
        FitClass::Correct
    } else {
        FitClass::Over
    };
    SelectionMetrics {
        size: tp + fp,
        tp,
        fp,
        fit_class,
    }
}

/// One benchmark scenario: a DGP, a loss, and the tuning protocol.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub dgp: DgpConfig,
    pub loss: Loss,
    pub reps: usize,
    /// Tuning settings; its `seed` field is ignored in favor of seeds
    /// derived per replication from the DGP master seed.
    pub tune: TuneOptions,
}

/// Aggregated metrics in table-row form. Averages are over the successful
/// replications; C + U + O equals their count.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchmarkRow {
    pub example: Example,
    pub n: usize,
    pub p: usize,
    pub eta: f64,
    pub loss: Loss,
    pub reps: usize,
    pub size_avg: f64,
    pub tp_avg: f64,
    pub fp_avg: f64,
    pub c: usize,
    pub u: usize,
    pub o: usize,
    pub failed: usize,
}

/// Run `reps` full tune-and-select pipelines on fresh draws of the scenario
/// and aggregate the selection metrics.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkRow> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    cfg.dgp.validate()?;
    if let (LabelConvention::Signs, Example::Regression1) =
        (cfg.loss.label_convention(), cfg.dgp.example)
    {
        return Err(Error::InvalidParameter(
            "margin losses need the classification scenario".into(),
        ));
    }

    let mut size_sum = 0usize;
    let mut tp_sum = 0usize;
    let mut fp_sum = 0usize;
    let mut c = 0usize;
    let mut u = 0usize;
    let mut o = 0usize;
    let mut failed = 0usize;

    for rep in 0..cfg.reps {
        let rep_seed = derive_seed(cfg.dgp.seed, rep as u64);
        let data_cfg = DgpConfig {
            seed: derive_seed(rep_seed, 0),
            ..cfg.dgp
        };
        let data = generate(&data_cfg)?;
        let tune_opts = TuneOptions {
            seed: derive_seed(rep_seed, 1),
            ..cfg.tune.clone()
        };
        match tune(&data.x.view(), &data.y.view(), cfg.loss, &tune_opts) {
            Ok(report) => {
                let m = evaluate_selection(&report.final_active_set, &data.true_set);
                size_sum += m.size;
                tp_sum += m.tp;
                fp_sum += m.fp;
                match m.fit_class {
                    FitClass::Correct => c += 1,
                    FitClass::Under => u += 1,
                    FitClass::Over => o += 1,
                }
            }
            Err(_) => failed += 1,
        }
    }

    let ok = (cfg.reps - failed).max(1) as f64;
    Ok(BenchmarkRow {
        example: cfg.dgp.example,
        n: cfg.dgp.n,
        p: cfg.dgp.p,
        eta: cfg.dgp.eta,
        loss: cfg.loss,
        reps: cfg.reps,
        size_avg: size_sum as f64 / ok,
        tp_avg: tp_sum as f64 / ok,
        fp_avg: fp_sum as f64 / ok,
        c,
        u,
        o,
        failed,
    })
}

/// Monte-Carlo estimate of the population squared gradient norm of the
/// regression scenario's target function in one coordinate, using its
/// analytic partial derivatives over fresh draws from the predictor
/// distribution. Test oracle; the regression scenario only.
pub fn oracle_population_gradnorm(cfg: &DgpConfig, coord: usize, mc_n: usize) -> Result<f64> {
    if cfg.example != Example::Regression1 {
        return Err(Error::InvalidParameter(
            "population gradient-norm oracle is defined for the regression scenario".into(),
        ));
    }
    cfg.validate()?;
    if coord >= cfg.p {
        return Err(Error::CoordinateOutOfRange {
            index: coord + 1,
            p: cfg.p,
        });
    }
    if mc_n == 0 {
        return Err(Error::InvalidParameter("mc_n must be positive".into()));
    }
    let mut rng = stream_rng(cfg.seed, 1);
    let mut acc = 0.0;
    // the target depends on the first 5 coordinates only
    let mut x = [0.0f64; 5];
    for _ in 0..mc_n {
        let u: f64 = rng.random_range(-0.5..0.5);
        for item in x.iter_mut() {
            let w: f64 = rng.random_range(-0.5..0.5);
            *item = (w + cfg.eta * u) / (1.0 + cfg.eta);
        }
        let g = example1_partial(&x, coord);
        acc += g * g;
    }
    Ok(acc / mc_n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::ActiveSet;

    fn reg_cfg(n: usize, p: usize, eta: f64, seed: u64) -> DgpConfig {
        DgpConfig {
            example: Example::Regression1,
            n,
            p,
            eta,
            seed,
        }
    }

    #[test]
    fn regression_function_hand_value_at_zero() {
        // 8*0 + 4*(1)(-1) + 6*(0.2 + 0.4) + 5*0 = -0.4
        let v = example1_regression(&[0.0; 5]);
        assert!((v - (-0.4)).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn logit_hand_value_at_half() {
        let v = example2_logit(&[0.5, 0.5]);
        assert!(v.abs() < 1e-12, "got {v}");
    }

    #[test]
    fn example1_ranges_and_determinism() {
        for eta in [0.0, 0.2] {
            let cfg = reg_cfg(200, 8, eta, 9);
            let a = gen_example1(&cfg).unwrap();
            let b = gen_example1(&cfg).unwrap();
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
            assert!(a.x.iter().all(|v| (-0.5..=0.5).contains(v)));
            assert_eq!(a.true_set, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn example1_entries_center_near_zero() {
        let cfg = reg_cfg(2000, 10, 0.0, 10);
        let d = gen_example1(&cfg).unwrap();
        let mean: f64 = d.x.iter().sum::<f64>() / (d.x.len() as f64);
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn example2_ranges_labels_and_determinism() {
        let cfg = DgpConfig {
            example: Example::Classification2,
            n: 300,
            p: 6,
            eta: 0.2,
            seed: 12,
        };
        let a = gen_example2(&cfg).unwrap();
        let b = gen_example2(&cfg).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert!(a.x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(a.y.iter().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(a.true_set, vec![0, 1]);
    }

    #[test]
    fn dgp_validates_dimensions() {
        assert!(gen_example1(&reg_cfg(10, 4, 0.0, 1)).is_err());
        let c2 = DgpConfig {
            example: Example::Classification2,
            n: 10,
            p: 1,
            eta: 0.0,
            seed: 1,
        };
        assert!(gen_example2(&c2).is_err());
    }

    #[test]
    fn metrics_classification_cases() {
        let truth: Vec<usize> = (0..5).collect();
        let exact = ActiveSet::from_indices((0..5).collect(), 0.0);
        let m = evaluate_selection(&exact, &truth);
        assert_eq!((m.tp, m.fp, m.fit_class), (5, 0, FitClass::Correct));

        let under = ActiveSet::from_indices((0..4).collect(), 0.0);
        let m = evaluate_selection(&under, &truth);
        assert_eq!((m.tp, m.fp, m.fit_class), (4, 0, FitClass::Under));

        let over = ActiveSet::from_indices((0..6).collect(), 0.0);
        let m = evaluate_selection(&over, &truth);
        assert_eq!((m.tp, m.fp, m.fit_class), (5, 1, FitClass::Over));
        assert_eq!(m.size, m.tp + m.fp);
    }

    #[test]
    fn oracle_constant_coordinate_is_exact() {
        let cfg = reg_cfg(10, 10, 0.0, 3);
        let v = oracle_population_gradnorm(&cfg, 0, 5000).unwrap();
        assert_eq!(v, 64.0);
        // coordinates past the fifth are exactly zero
        let z = oracle_population_gradnorm(&cfg, 7, 5000).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn oracle_error_shrinks_with_mc_size() {
        // coordinate 2 (zero-based 1): E[64 f3(x3)^2] with x3 ~ U(-0.5, 0.5):
        // 64 * E[(2u - 1)^2] = 64 * (4/12 + 1) = 64 * 4/3
        let expect = 64.0 * 4.0 / 3.0;
        let cfg = reg_cfg(10, 10, 0.0, 3);
        let small = oracle_population_gradnorm(&cfg, 1, 2_000).unwrap();
        let large = oracle_population_gradnorm(&cfg, 1, 200_000).unwrap();
        assert!((large - expect).abs() < (small - expect).abs().max(0.5));
        assert!((large - expect).abs() / expect < 0.02);
    }
}
