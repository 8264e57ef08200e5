//! Small dense linear-algebra helpers: Cholesky factorization and a power
//! iteration estimate of the spectral norm. Kernel matrices are at most a
//! few thousand rows here, so plain dense routines are enough.

use ndarray::{Array1, Array2};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factor `a = L Lᵀ`. Returns `None` if a non-positive pivot is hit.
    pub fn new(a: &Array2<f64>) -> Option<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[[i, i]] = s.sqrt();
                } else {
                    l[[i, j]] = s / l[[j, j]];
                }
            }
        }
        Some(Cholesky { l })
    }

    /// Solve `A x = b` via forward and back substitution.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.l.nrows();
        debug_assert_eq!(n, b.len());
        let mut x = b.clone();
        // L z = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[[i, k]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        // Lᵀ x = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * x[k];
            }
            x[i] = s / self.l[[i, i]];
        }
        x
    }
}

/// Power-iteration estimate of the spectral norm of a symmetric PSD matrix.
///
/// Starts from the normalized all-ones vector; Gram matrices have strictly
/// positive entries, so the top eigenvector is never orthogonal to it.
pub fn spectral_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Array1::<f64>::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut last = 0.0f64;
    for _ in 0..200 {
        let w = a.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let est = v.dot(&a.dot(&v));
        if (est - last).abs() <= 1e-10 * est.abs().max(1.0) {
            return est;
        }
        last = est;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let f = Cholesky::new(&a).expect("SPD");
        let x = f.solve(&b);
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn spectral_norm_diagonal() {
        let a = array![[3.0, 0.0], [0.0, 1.5]];
        let s = spectral_norm(&a);
        assert!((s - 3.0).abs() < 1e-8);
    }
}
