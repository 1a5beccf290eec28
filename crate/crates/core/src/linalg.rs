//! Dense symmetric positive definite solves and smallest eigenvalues.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest order for which `lambda_min` comes from a full dense eigensolve.
pub const DENSE_EIG_LIMIT: usize = 2048;

/// How a kernel matrix was factorized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorReport {
    pub method: &'static str,
    /// Diagonal shift added before the successful factorization.
    pub shift: f64,
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    report: FactorReport,
}

impl SpdFactor {
    /// Plain Cholesky factorization without any retry.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let shift = 1e-14 * a.trace() / a.nrows().max(1) as f64;
        match Cholesky::new(a) {
            Some(chol) => Ok(Self {
                chol,
                report: FactorReport {
                    method: "cholesky",
                    shift: 0.0,
                },
            }),
            None => Err(Error::Conditioning {
                lambda_min: -shift,
                separation: f64::NAN,
            }),
        }
    }

    /// Factorizes the matrix produced by `build`; on failure retries once
    /// with the diagonal shifted by `1e-14 * trace / n`. The matrix is
    /// rebuilt for the retry rather than kept as a second copy.
    pub fn with_retry(build: impl Fn() -> DMatrix<f64>) -> Result<Self> {
        if let Ok(f) = Self::new(build()) {
            return Ok(f);
        }
        let mut a = build();
        let n = a.nrows();
        let shift = 1e-14 * a.trace() / n.max(1) as f64;
        for i in 0..n {
            a[(i, i)] += shift;
        }
        match Cholesky::new(a) {
            Some(chol) => Ok(Self {
                chol,
                report: FactorReport {
                    method: "cholesky+shift",
                    shift,
                },
            }),
            None => {
                let a = build();
                let lambda_min = if n <= DENSE_EIG_LIMIT {
                    a.symmetric_eigenvalues().min()
                } else {
                    -shift
                };
                Err(Error::Conditioning {
                    lambda_min,
                    separation: f64::NAN,
                })
            }
        }
    }

    pub fn report(&self) -> &FactorReport {
        &self.report
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `L^{-1} b`, so that `b^T A^{-1} b = |L^{-1} b|^2`.
    pub fn half_solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut x);
        x
    }
}

/// Step limit of the iterative smallest-eigenvalue estimate.
pub const LANCZOS_STEPS: usize = 300;

/// Smallest eigenvalue of a symmetric matrix.
///
/// Up to [`DENSE_EIG_LIMIT`] this is a dense eigensolve. Above it, at most
/// [`LANCZOS_STEPS`] Lanczos steps on the inverse with a `1e-6` relative
/// residual tolerance; the result is then an upper estimate whose accuracy
/// is limited by the spacing at the bottom of the spectrum.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::usage("eigenvalue of an empty matrix"));
    }
    if n <= DENSE_EIG_LIMIT {
        return Ok(a.clone().symmetric_eigenvalues().min());
    }
    let factor = SpdFactor::new(a.clone())?;
    Ok(inverse_power(&factor, 1e-6, LANCZOS_STEPS))
}

/// Largest eigenvalue of `A^{-1}`, inverted. Lanczos iteration on the
/// inverse with full reorthogonalization; a plain power iteration stalls on
/// the clustered lower spectrum of kernel matrices. Stops once the Ritz
/// residual `beta_k |s_k|` falls below `rel_tol` times the Ritz value.
pub(crate) fn inverse_power(factor: &SpdFactor, rel_tol: f64, max_iter: usize) -> f64 {
    let n = factor.dim();
    let steps = max_iter.min(n);
    let mut q = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.754_877_666).fract());
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut top = 0.0;
    for j in 0..steps {
        let mut w = factor.solve(&q);
        let a = q.dot(&w);
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        let last_step = j + 1 == steps;
        if j % 8 == 7 || last_step || b <= 1e-14 * top {
            let (theta, tail) = ritz_max(&alpha, &beta);
            top = theta;
            if b * tail.abs() <= rel_tol * theta || b <= 1e-14 * theta {
                break;
            }
        }
        if last_step {
            break;
        }
        beta.push(b);
        q = w / b;
    }
    1.0 / top
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, with the last component of its
/// eigenvector.
fn ritz_max(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let i = eig.eigenvalues.imax();
    (eig.eigenvalues[i], eig.eigenvectors[(k - 1, i)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kms(n: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()))
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = kms(50, 0.6);
        let f = SpdFactor::new(a.clone()).unwrap();
        let b = DVector::from_fn(50, |i, _| (i as f64).sin());
        let x = f.solve(&b);
        assert!((&a * x - &b).amax() < 1e-12);
        assert_eq!(f.report().shift, 0.0);
    }

    #[test]
    fn retry_shifts_singular_matrix() {
        // rank-one but positive semidefinite
        let v = DVector::from_fn(4, |i, _| i as f64 + 1.0);
        let a = &v * v.transpose();
        assert!(SpdFactor::new(a.clone()).is_err());
        let f = SpdFactor::with_retry(|| a.clone()).unwrap();
        assert_eq!(f.report().method, "cholesky+shift");
        assert!(f.report().shift > 0.0);
    }

    #[test]
    fn indefinite_matrix_reports_conditioning() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match SpdFactor::with_retry(|| a.clone()) {
            Err(Error::Conditioning { lambda_min, .. }) => assert!((lambda_min + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverse_power_matches_dense() {
        // KMS matrix: eigenvalues known to be in (1-rho)/(1+rho) .. (1+rho)/(1-rho)
        let a = kms(300, 0.9);
        let dense = a.clone().symmetric_eigenvalues().min();
        let f = SpdFactor::new(a).unwrap();
        let it = inverse_power(&f, 1e-10, 300);
        assert!((it - dense).abs() <= 1e-6 * dense, "{it} vs {dense}");
    }
}
