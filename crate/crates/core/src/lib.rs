//! Sparse learning for kernel M-estimators.
//!
//! Fits a regularized M-estimator in the RKHS of the Gaussian kernel under a
//! convex loss, scores each input variable by the empirical norm of the
//! fitted function's partial derivative, hard-thresholds the scores into an
//! active set, and tunes the regularization and threshold jointly by
//! kappa-based selection stability over random half-splits.
//!
//! The pieces compose directly:
//!
//! ```
//! use ndarray::{Array1, Array2};
//! use rkhs_sparse::{fit, gradient_scores, select, BandwidthConfig, Loss, SolverOptions};
//!
//! // y depends on the first coordinate only
//! let strides = [7usize, 5, 11];
//! let moduli = [19usize, 13, 17];
//! let x = Array2::from_shape_fn((40, 3), |(i, j)| {
//!     let m = moduli[j] as f64;
//!     ((i * strides[j]) % moduli[j]) as f64 / (m - 1.0) - 0.5
//! });
//! let y = Array1::from_shape_fn(40, |i| 4.0 * x[[i, 0]]);
//! let model = fit(
//!     &x.view(),
//!     &y.view(),
//!     Loss::Square,
//!     1e-3,
//!     &BandwidthConfig::MedianHeuristic,
//!     &SolverOptions::default(),
//! )
//! .unwrap();
//! let scores = gradient_scores(&model, None).unwrap();
//! let active = select(&scores, 0.5).unwrap();
//! assert_eq!(active.indices(), &[0]);
//! ```

pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod linalg;
pub mod loss;
pub mod parallel;
pub mod report;
pub mod rng;
pub mod selector;
pub mod sim;
pub mod stability;

pub use dataset::{load_csv, Dataset, ResponseSpec};
pub use error::{Error, Result};
pub use estimator::{fit, FittedModel, SolverOptions};
pub use kernel::{
    cross_gram, deriv_kernel_matrix, gram, kernel_vector, median_bandwidth, BandwidthConfig,
    DerivKernelMatrix, GramMatrix,
};
pub use loss::{LabelConvention, Loss};
pub use report::{BenchmarkReport, SelectionReport, StabilityCurve, SCHEMA_VERSION};
pub use selector::{gradient_scores, select, ActiveSet, GradientScores};
pub use sim::{
    evaluate_selection, gen_example1, gen_example2, generate, oracle_population_gradnorm,
    run_benchmark, BenchmarkConfig, BenchmarkRow, DgpConfig, Example, FitClass, SelectionMetrics,
    SimData,
};
pub use stability::{
    cohen_kappa, default_grid, select_stable_pair, stability_estimate, tune, tune_grid_only,
    GridSummary, SplitPlan, StabilityReport, TuneOptions,
};
