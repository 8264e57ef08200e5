//! Command-line front end: `fit`, `select`, `tune`, `simulate`, `kappa`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
//! All randomness flows from `--seed` (default 0, never entropy).

use crate::dataset::{load_csv, Dataset, ResponseSpec};
use crate::error::{Error, Result};
use crate::estimator::{fit, SolverOptions};
use crate::kernel::BandwidthConfig;
use crate::loss::Loss;
use crate::report::{BenchmarkReport, SelectionReport, StabilityCurve, SCHEMA_VERSION};
use crate::selector::gradient_scores;
use crate::sim::{run_benchmark, BenchmarkConfig, DgpConfig, Example};
use crate::stability::{cohen_kappa, tune, tune_grid_only, TuneOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "rkhs-sparse",
    version,
    about = "Sparse variable selection via kernel M-estimation, gradient scoring, and stability tuning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a single model at a fixed lambda and report gradient scores.
    Fit(FitArgs),
    /// Tune (lambda, v) by selection stability, then select on the full sample.
    Select(SelectArgs),
    /// Compute the stability surface and the chosen (lambda, v) only.
    Tune(SelectArgs),
    /// Run a synthetic benchmark scenario and report the metrics row.
    Simulate(SimulateArgs),
    /// Cohen's kappa between two one-based index sets.
    Kappa(KappaArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV (numeric cells, optional header row).
    #[arg(long)]
    pub input: PathBuf,
    /// Response column: header name or one-based index.
    #[arg(long)]
    pub response: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Square,
    Check,
    Eps,
    Logistic,
    Hinge,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    #[arg(long, value_enum)]
    pub loss: LossKind,
    /// Quantile level for the check loss (default 0.5).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tube half-width for the eps-insensitive loss (default 0.1).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    /// Lambda grid as lo:hi:step over base-10 exponents.
    #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
    pub lambda_grid: String,
    /// Threshold grid as lo:hi:step over base-10 exponents.
    #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
    pub v_grid: String,
    /// Number of random half-split replications.
    #[arg(long, default_value_t = 20)]
    pub splits: usize,
    /// Stability fraction q in (0, 1] for the threshold rule.
    #[arg(long, default_value_t = 0.9)]
    pub stability_q: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Regularization parameter.
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub stability: StabilityArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleArg {
    Regression1,
    Classification2,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub example: ExampleArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Predictor correlation knob.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Replications of the full pipeline (scaled-down default).
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Run the full 50 replications regardless of --reps.
    #[arg(long, default_value_t = false)]
    pub full: bool,
    #[command(flatten)]
    pub stability: StabilityArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct KappaArgs {
    /// First set: comma-separated one-based indices (empty string allowed).
    #[arg(long, default_value = "")]
    pub a: String,
    /// Second set: comma-separated one-based indices.
    #[arg(long, default_value = "")]
    pub b: String,
    /// Universe size.
    #[arg(long)]
    pub p: usize,
}

/// Parse a `lo:hi:step` exponent range into grid values `10^(lo + s*step)`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "grid spec must be lo:hi:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidParameter(format!("grid spec component {s:?} is not a number"))
            })
        })
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !lo.is_finite() || !hi.is_finite() || !step.is_finite() || step <= 0.0 || hi < lo {
        return Err(Error::InvalidParameter(format!(
            "grid spec needs hi >= lo and step > 0, got {spec:?}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_001 {
        return Err(Error::InvalidParameter(format!(
            "grid spec {spec:?} yields {count} points"
        )));
    }
    Ok((0..count)
        .map(|s| 10f64.powf(lo + s as f64 * step))
        .collect())
}

fn build_loss(args: &LossArgs) -> Result<Loss> {
    if args.tau.is_some() && args.loss != LossKind::Check {
        return Err(Error::InvalidParameter(
            "--tau only applies to the check loss".into(),
        ));
    }
    if args.epsilon.is_some() && args.loss != LossKind::Eps {
        return Err(Error::InvalidParameter(
            "--epsilon only applies to the eps loss".into(),
        ));
    }
    match args.loss {
        LossKind::Square => Ok(Loss::Square),
        LossKind::Check => Loss::check(args.tau.unwrap_or(0.5)),
        LossKind::Eps => Loss::eps_insensitive(args.epsilon.unwrap_or(0.1)),
        LossKind::Logistic => Ok(Loss::Logistic),
        LossKind::Hinge => Ok(Loss::Hinge),
    }
}

fn load(data: &DataArgs) -> Result<Dataset> {
    load_csv(&data.input, &ResponseSpec::parse(&data.response))
}

fn emit(report_json: String, report_csv: String, output: &OutputArgs) -> Result<()> {
    let text = match output.format {
        OutputFormat::Json => report_json,
        OutputFormat::Csv => report_csv,
    };
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::ReportWrite(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let data = load(&args.data)?;
    let loss = build_loss(&args.loss)?;
    let model = fit(
        &data.x.view(),
        &data.y.view(),
        loss,
        args.lambda,
        &BandwidthConfig::MedianHeuristic,
        &SolverOptions::default(),
    )?;
    let scores = gradient_scores(&model, None)?;
    let mut warnings = Vec::new();
    if !model.converged() {
        warnings.push(format!(
            "solver hit the iteration cap ({})",
            model.solver_iterations()
        ));
    }
    let report = SelectionReport {
        schema_version: SCHEMA_VERSION,
        n: data.x.nrows(),
        p: data.x.ncols(),
        loss,
        bandwidth: model.sigma(),
        chosen_lambda: args.lambda,
        chosen_v: None,
        scores: scores.scores().to_vec(),
        scores_normalized: scores.max_normalized(),
        active_set: None,
        stability_curve: None,
        warnings,
    };
    emit(report.to_json()?, report.to_csv(), &args.output)
}

fn tune_options(args: &SelectArgs) -> Result<TuneOptions> {
    Ok(TuneOptions {
        lambda_grid: parse_grid(&args.stability.lambda_grid)?,
        v_grid: parse_grid(&args.stability.v_grid)?,
        splits: args.stability.splits,
        q_fraction: args.stability.stability_q,
        seed: args.seed,
        bandwidth: BandwidthConfig::MedianHeuristic,
        solver: SolverOptions::default(),
    })
}

fn run_select(args: &SelectArgs) -> Result<()> {
    let data = load(&args.data)?;
    let loss = build_loss(&args.loss)?;
    let opts = tune_options(args)?;
    let rep = tune(&data.x.view(), &data.y.view(), loss, &opts)?;
    let report = SelectionReport {
        schema_version: SCHEMA_VERSION,
        n: data.x.nrows(),
        p: data.x.ncols(),
        loss,
        bandwidth: rep.bandwidth,
        chosen_lambda: rep.chosen_lambda,
        chosen_v: Some(rep.chosen_v),
        scores: rep.final_scores.scores().to_vec(),
        scores_normalized: rep.final_scores.max_normalized(),
        active_set: Some(rep.final_active_set.indices_one_based()),
        stability_curve: Some(StabilityCurve {
            lambda_grid: rep.lambda_grid,
            v_grid: rep.v_grid,
            s_hat: rep.s_hat,
        }),
        warnings: rep.warnings,
    };
    emit(report.to_json()?, report.to_csv(), &args.output)
}

fn run_tune(args: &SelectArgs) -> Result<()> {
    let data = load(&args.data)?;
    let loss = build_loss(&args.loss)?;
    let opts = tune_options(args)?;
    let grid = tune_grid_only(&data.x.view(), &data.y.view(), loss, &opts)?;
    let bandwidth = BandwidthConfig::MedianHeuristic.resolve(&data.x.view())?;
    let report = SelectionReport {
        schema_version: SCHEMA_VERSION,
        n: data.x.nrows(),
        p: data.x.ncols(),
        loss,
        bandwidth,
        chosen_lambda: grid.chosen_lambda,
        chosen_v: Some(grid.chosen_v),
        scores: Vec::new(),
        scores_normalized: Vec::new(),
        active_set: None,
        stability_curve: Some(StabilityCurve {
            lambda_grid: opts.lambda_grid,
            v_grid: opts.v_grid,
            s_hat: grid.s_hat,
        }),
        warnings: grid.warnings,
    };
    emit(report.to_json()?, report.to_csv(), &args.output)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let loss = build_loss(&args.loss)?;
    let reps = if args.full { 50 } else { args.reps };
    let cfg = BenchmarkConfig {
        dgp: DgpConfig {
            example: match args.example {
                ExampleArg::Regression1 => Example::Regression1,
                ExampleArg::Classification2 => Example::Classification2,
            },
            n: args.n,
            p: args.p,
            eta: args.eta,
            seed: args.seed,
        },
        loss,
        reps,
        tune: TuneOptions {
            lambda_grid: parse_grid(&args.stability.lambda_grid)?,
            v_grid: parse_grid(&args.stability.v_grid)?,
            splits: args.stability.splits,
            q_fraction: args.stability.stability_q,
            seed: 0, // replaced per replication
            bandwidth: BandwidthConfig::MedianHeuristic,
            solver: SolverOptions::default(),
        },
    };
    let row = run_benchmark(&cfg)?;
    let report = BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        seed: args.seed,
        row,
    };
    emit(report.to_json()?, report.to_csv(), &args.output)
}

fn parse_index_set(spec: &str, p: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let idx: usize = part.parse().map_err(|_| {
            Error::InvalidParameter(format!("index {part:?} is not a positive integer"))
        })?;
        if idx < 1 {
            return Err(Error::SetMemberOutOfRange { index: idx, p });
        }
        out.push(idx - 1);
    }
    Ok(out)
}

fn run_kappa(args: &KappaArgs) -> Result<()> {
    if args.p == 0 {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    let a = parse_index_set(&args.a, args.p)?;
    let b = parse_index_set(&args.b, args.p)?;
    let kappa = cohen_kappa(&a, &b, args.p)?;
    println!("{kappa}");
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Select(args) => run_select(args),
        Command::Tune(args) => run_tune(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Kappa(args) => run_kappa(args),
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run_cli() -> i32 {
    crate::parallel::init_thread_pool_from_env();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprint!("{e}");
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
