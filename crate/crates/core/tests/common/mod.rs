//! Shared oracles for the integration suites. Everything here is
//! independent of the library's analytic computation paths: scores come
//! from finite differences of `predict`, eigenvalues from a Jacobi sweep.

use ndarray::{Array2, ArrayView2, Axis};
use rkhs_sparse::FittedModel;

/// Finite-difference oracle for the empirical squared gradient norms:
/// differentiates `predict` centrally in each coordinate at each
/// evaluation point.
pub fn fd_gradient_scores(model: &FittedModel, eval: &ArrayView2<f64>, h: f64) -> Vec<f64> {
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
                let fp = model.predict(&plus.insert_axis(Axis(0)).view()).unwrap()[0];
                let fm = model.predict(&minus.insert_axis(Axis(0)).view()).unwrap()[0];
                let g = (fp - fm) / (2.0 * h);
                acc += g * g;
            }
            acc / m as f64
        })
        .collect()
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn smallest_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off < 1e-24 {
            break;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let apq = m[[i, j]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[[j, j]] - m[[i, i]]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mik = m[[i, k]];
                    let mjk = m[[j, k]];
                    m[[i, k]] = c * mik - s * mjk;
                    m[[j, k]] = s * mik + c * mjk;
                }
                for k in 0..n {
                    let mki = m[[k, i]];
                    let mkj = m[[k, j]];
                    m[[k, i]] = c * mki - s * mkj;
                    m[[k, j]] = s * mki + c * mkj;
                }
            }
        }
    }
    (0..n).map(|i| m[[i, i]]).fold(f64::INFINITY, f64::min)
}
