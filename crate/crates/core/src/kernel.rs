//! Gaussian kernel primitives: median-heuristic bandwidth, Gram matrices,
//! kernel sections, and the analytic derivative-kernel matrices that drive
//! gradient-based variable scoring.
//!
//! The kernel is `K(u, v) = exp(-||u - v||^2 / (2 sigma^2))`. It is the only
//! built-in kernel: keeping the family closed keeps the derivative formulas
//! analytic and testable.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

/// Rows above which the median heuristic switches from the exact
/// n(n-1)/2 enumeration to a fixed-seed subsample of pairs.
const MEDIAN_EXACT_MAX_N: usize = 5000;
const MEDIAN_SUBSAMPLE_PAIRS: usize = 1_000_000;
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x6D65_6469_616E;

/// How the kernel length-scale is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthConfig {
    /// Median of the pairwise Euclidean distances of the training sample.
    #[default]
    MedianHeuristic,
    /// A fixed positive length-scale, in predictor units.
    Fixed(f64),
}

impl BandwidthConfig {
    /// Resolve to a concrete positive bandwidth for the given sample.
    pub fn resolve(&self, x: &ArrayView2<f64>) -> Result<f64> {
        match *self {
            BandwidthConfig::MedianHeuristic => median_bandwidth(x),
            BandwidthConfig::Fixed(v) => {
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidBandwidth(v))
                }
            }
        }
    }
}

/// Symmetric kernel matrix with unit diagonal, entries in (0, 1].
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: Array2<f64>,
    bandwidth: f64,
}

impl GramMatrix {
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Matrix of kernel partial derivatives for one coordinate:
/// entry (i, j) is the derivative of `x -> K(x_i, x)` in coordinate `l`,
/// evaluated at `x = x_j`.
#[derive(Debug, Clone)]
pub struct DerivKernelMatrix {
    coordinate: usize,
    entries: Array2<f64>,
}

impl DerivKernelMatrix {
    /// Zero-based coordinate index.
    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }
}

fn check_finite(x: &ArrayView2<f64>, what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn squared_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Median of the pairwise Euclidean distances among the rows of `x`.
///
/// Exact over all n(n-1)/2 pairs up to 5000 rows; beyond that, a fixed-seed
/// subsample of 10^6 pairs keeps the cost bounded while staying
/// deterministic. An even pair count takes the mean of the two central
/// order statistics.
pub fn median_bandwidth(x: &ArrayView2<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "median bandwidth needs at least 2 rows, got {n}"
        )));
    }
    check_finite(x, "median_bandwidth input")?;

    let mut dists: Vec<f64> = if n <= MEDIAN_EXACT_MAX_N {
        let mut d = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            let xi = x.row(i);
            for j in (i + 1)..n {
                d.push(squared_distance(&xi, &x.row(j)).sqrt());
            }
        }
        d
    } else {
        let mut rng = stream_rng(MEDIAN_SUBSAMPLE_SEED, n as u64);
        let mut d = Vec::with_capacity(MEDIAN_SUBSAMPLE_PAIRS);
        for _ in 0..MEDIAN_SUBSAMPLE_PAIRS {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            d.push(squared_distance(&x.row(i), &x.row(j)).sqrt());
        }
        d
    };

    let m = dists.len();
    let (_, upper, _) = dists.select_nth_unstable_by(m / 2, f64::total_cmp);
    let upper = *upper;
    let median = if m % 2 == 1 {
        upper
    } else {
        let lower = dists[..m / 2]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };

    if median == 0.0 {
        Err(Error::DegenerateBandwidth)
    } else {
        Ok(median)
    }
}

/// Row-wise squared norms, shared by the Gram builders.
fn row_sq_norms(x: &ArrayView2<f64>) -> Array1<f64> {
    Array1::from_iter(x.rows().into_iter().map(|r| r.dot(&r)))
}

/// Gram matrix of the Gaussian kernel over the rows of `x`.
///
/// Entries come from the inner-product expansion
/// `||xi - xj||^2 = ||xi||^2 + ||xj||^2 - 2 <xi, xj>` so the heavy part is a
/// single matrix product. The upper triangle is mirrored and the diagonal
/// pinned to 1, keeping the stated invariants exact.
pub fn gram(x: &ArrayView2<f64>, sigma: f64) -> Result<GramMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidBandwidth(sigma));
    }
    check_finite(x, "gram input")?;

    let n = x.nrows();
    let inner = x.dot(&x.t());
    let norms = row_sq_norms(x);
    let inv = 1.0 / (2.0 * sigma * sigma);

    let mut k = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let d2 = (norms[i] + norms[j] - 2.0 * inner[[i, j]]).max(0.0);
            let v = (-d2 * inv).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(GramMatrix {
        entries: k,
        bandwidth: sigma,
    })
}

/// Kernel section `(K(x_1, x), ..., K(x_n, x))` for a single point.
pub fn kernel_vector(
    train: &ArrayView2<f64>,
    point: &ArrayView1<f64>,
    sigma: f64,
) -> Result<Array1<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidBandwidth(sigma));
    }
    if point.len() != train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "kernel_vector point",
            expected: train.ncols(),
            actual: point.len(),
        });
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    Ok(Array1::from_iter(
        train
            .rows()
            .into_iter()
            .map(|r| (-squared_distance(&r, point) * inv).exp()),
    ))
}

/// Cross-kernel matrix with entry (i, j) = K(train_i, eval_j).
pub fn cross_gram(
    train: &ArrayView2<f64>,
    eval: &ArrayView2<f64>,
    sigma: f64,
) -> Result<Array2<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidBandwidth(sigma));
    }
    if eval.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cross_gram eval",
            expected: train.ncols(),
            actual: eval.ncols(),
        });
    }
    check_finite(train, "cross_gram train")?;
    check_finite(eval, "cross_gram eval")?;

    let inner = train.dot(&eval.t());
    let tn = row_sq_norms(train);
    let en = row_sq_norms(eval);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut k = inner;
    for ((i, j), v) in k.indexed_iter_mut() {
        let d2 = (tn[i] + en[j] - 2.0 * *v).max(0.0);
        *v = (-d2 * inv).exp();
    }
    Ok(k)
}

/// Derivative-kernel matrix for coordinate `coord` (zero-based):
/// entry (i, j) = K(x_i, x_j) * (x_i^l - x_j^l) / sigma^2.
///
/// The diagonal is exactly zero and the matrix is antisymmetric.
pub fn deriv_kernel_matrix(
    x: &ArrayView2<f64>,
    sigma: f64,
    coord: usize,
) -> Result<DerivKernelMatrix> {
    if coord >= x.ncols() {
        return Err(Error::CoordinateOutOfRange {
            index: coord + 1,
            p: x.ncols(),
        });
    }
    let g = gram(x, sigma)?;
    Ok(deriv_from_gram(g.entries(), x, sigma, coord))
}

/// Same as [`deriv_kernel_matrix`] but reusing an existing Gram matrix.
pub(crate) fn deriv_from_gram(
    gram: &Array2<f64>,
    x: &ArrayView2<f64>,
    sigma: f64,
    coord: usize,
) -> DerivKernelMatrix {
    let n = x.nrows();
    let inv_s2 = 1.0 / (sigma * sigma);
    let col = x.column(coord);
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[[i, j]] = gram[[i, j]] * (col[i] - col[j]) * inv_s2;
            }
        }
    }
    DerivKernelMatrix {
        coordinate: coord,
        entries: d,
    }
}
