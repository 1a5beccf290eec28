//! Minimum-norm kernel interpolation, the power function, and the
//! stability and native-norm checks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::kernels::{gram_entries, RadialKernel};
use crate::linalg::{min_eigenvalue, FactorReport, SpdFactor};

/// Evaluation points are processed in blocks of this many rows.
const BLOCK: usize = 512;

/// Relative node residual accepted without comment.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

pub(crate) fn check_smoothness(kernel: &RadialKernel, dim: usize) -> Result<()> {
    if kernel.tau() <= dim as f64 / 2.0 {
        return Err(Error::usage(format!(
            "kernel '{}' has tau = {} which does not exceed d/2 = {}",
            kernel.name(),
            kernel.tau(),
            dim as f64 / 2.0
        )));
    }
    Ok(())
}

/// A factorized kernel matrix, reusable for several right-hand sides.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    kernel: RadialKernel,
    centers: PointSet,
    factor: SpdFactor,
}

impl KernelSystem {
    pub fn new(kernel: &RadialKernel, centers: &PointSet) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::usage("interpolation needs at least one center"));
        }
        check_smoothness(kernel, centers.dim())?;
        centers.check_distinct()?;
        let factor = SpdFactor::with_retry(|| gram_entries(kernel, centers)).map_err(|e| match e {
            Error::Conditioning { lambda_min, .. } => Error::Conditioning {
                lambda_min,
                separation: centers.separation_distance().unwrap_or(f64::NAN),
            },
            other => other,
        })?;
        Ok(Self {
            kernel: kernel.clone(),
            centers: centers.clone(),
            factor,
        })
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn report(&self) -> &FactorReport {
        self.factor.report()
    }

    pub fn fit(&self, values: &[f64]) -> Result<Interpolant> {
        Ok(self.fit_many(&[values.to_vec()])?.pop().expect("one interpolant"))
    }

    /// Interpolants for several data vectors sharing one factorization.
    pub fn fit_many(&self, values: &[Vec<f64>]) -> Result<Vec<Interpolant>> {
        let n = self.centers.len();
        if let Some(bad) = values.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        if values.is_empty() {
            return Ok(Vec::new());
        }
        let rhs = DMatrix::from_fn(n, values.len(), |i, j| values[j][i]);
        let coeffs = self.factor.solve_many(&rhs);
        let fitted = apply_kernel(&self.kernel, &self.centers, &self.centers, &coeffs);
        Ok(values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let residual = v
                    .iter()
                    .enumerate()
                    .map(|(i, f)| (fitted[(i, j)] - f).abs())
                    .fold(0.0, f64::max);
                Interpolant {
                    kernel: self.kernel.clone(),
                    centers: self.centers.clone(),
                    coeffs: coeffs.column(j).into_owned(),
                    residual_at_nodes: residual,
                    report: self.factor.report().clone(),
                }
            })
            .collect())
    }

    /// `P_X(x) = sqrt(k(x, x) - b^T A^{-1} b)` at every point.
    pub fn power_function(&self, points: &PointSet) -> Result<PowerFunction> {
        if points.dim() != self.centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.centers.dim(),
                got: points.dim(),
            });
        }
        let diag = self.kernel.phi(0.0);
        let n = self.centers.len();
        let raw: Vec<f64> = point_blocks(points)
            .into_par_iter()
            .flat_map_iter(|(start, len)| {
                let b = DMatrix::from_fn(n, len, |i, j| {
                    self.kernel
                        .eval_unchecked(self.centers.point(i), points.point(start + j))
                });
                let z = self.factor.half_solve(&b);
                (0..len).map(|j| diag - z.column(j).norm_squared()).collect::<Vec<_>>()
            })
            .collect();
        Ok(PowerFunction::from_raw(raw))
    }
}

/// Solves `A_X alpha = values`.
pub fn fit(kernel: &RadialKernel, centers: &PointSet, values: &[f64]) -> Result<Interpolant> {
    if values.len() != centers.len() {
        return Err(Error::DimensionMismatch {
            expected: centers.len(),
            got: values.len(),
        });
    }
    KernelSystem::new(kernel, centers)?.fit(values)
}

/// `s = sum_j alpha_j k(., x_j)`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    kernel: RadialKernel,
    centers: PointSet,
    coeffs: DVector<f64>,
    residual_at_nodes: f64,
    report: FactorReport,
}

impl Interpolant {
    /// A kernel expansion with given coefficients; no system is solved.
    pub fn from_coeffs(kernel: &RadialKernel, centers: &PointSet, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            kernel: kernel.clone(),
            centers: centers.clone(),
            coeffs: DVector::from_vec(coeffs),
            residual_at_nodes: 0.0,
            report: FactorReport {
                method: "none",
                shift: 0.0,
            },
        })
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    /// `max_i |s(x_i) - f(x_i)|` at the time of the fit.
    pub fn residual_at_nodes(&self) -> f64 {
        self.residual_at_nodes
    }

    pub fn factorization(&self) -> &FactorReport {
        &self.report
    }

    pub fn evaluate(&self, points: &PointSet) -> Result<Vec<f64>> {
        if points.dim() != self.centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.centers.dim(),
                got: points.dim(),
            });
        }
        let c = DMatrix::from_column_slice(self.coeffs.len(), 1, self.coeffs.as_slice());
        Ok(apply_kernel(&self.kernel, points, &self.centers, &c)
            .column(0)
            .iter()
            .copied()
            .collect())
    }

    /// `|s|^2_H = alpha^T A_X alpha`.
    pub fn native_norm_sq(&self) -> f64 {
        let c = DMatrix::from_column_slice(self.coeffs.len(), 1, self.coeffs.as_slice());
        let a_alpha = apply_kernel(&self.kernel, &self.centers, &self.centers, &c);
        self.coeffs.dot(&a_alpha.column(0))
    }
}

/// Values of several interpolants over the same centers, one vector per
/// interpolant.
pub fn evaluate_many(interpolants: &[Interpolant], points: &PointSet) -> Result<Vec<Vec<f64>>> {
    let Some(first) = interpolants.first() else {
        return Ok(Vec::new());
    };
    if interpolants
        .iter()
        .any(|s| s.centers != first.centers || s.kernel != first.kernel)
    {
        return Err(Error::usage("batched evaluation needs a common kernel and centers"));
    }
    if points.dim() != first.centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.centers.dim(),
            got: points.dim(),
        });
    }
    let n = first.centers.len();
    let c = DMatrix::from_fn(n, interpolants.len(), |i, j| interpolants[j].coeffs[i]);
    let out = apply_kernel(&first.kernel, points, &first.centers, &c);
    Ok((0..interpolants.len())
        .map(|j| out.column(j).iter().copied().collect())
        .collect())
}

fn point_blocks(points: &PointSet) -> Vec<(usize, usize)> {
    (0..points.len())
        .step_by(BLOCK)
        .map(|s| (s, BLOCK.min(points.len() - s)))
        .collect()
}

/// `K(points, centers) * coeffs` without storing the full kernel matrix.
pub(crate) fn apply_kernel(
    kernel: &RadialKernel,
    points: &PointSet,
    centers: &PointSet,
    coeffs: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = centers.len();
    let k = coeffs.ncols();
    let blocks: Vec<DMatrix<f64>> = point_blocks(points)
        .into_par_iter()
        .map(|(start, len)| {
            let b = DMatrix::from_fn(len, n, |i, j| {
                kernel.eval_unchecked(points.point(start + i), centers.point(j))
            });
            b * coeffs
        })
        .collect();
    let mut out = DMatrix::zeros(points.len(), k);
    for ((start, len), block) in point_blocks(points).into_iter().zip(blocks) {
        out.rows_mut(start, len).copy_from(&block);
    }
    out
}

/// Power function values with negative round-off clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFunction {
    pub values: Vec<f64>,
    /// Most negative raw value of `P^2` before clamping, or 0.
    pub most_negative_raw: f64,
}

impl PowerFunction {
    fn from_raw(raw: Vec<f64>) -> Self {
        let most_negative_raw = raw.iter().copied().fold(0.0, f64::min);
        Self {
            values: raw.into_iter().map(|v| v.max(0.0).sqrt()).collect(),
            most_negative_raw,
        }
    }
}

/// Power function of `kernel` on `centers`; for an empty center set this is
/// `sqrt(k(x, x))`.
pub fn power_function(kernel: &RadialKernel, centers: &PointSet, points: &PointSet) -> Result<PowerFunction> {
    if centers.is_empty() {
        return Ok(PowerFunction::from_raw(vec![kernel.phi(0.0); points.len()]));
    }
    KernelSystem::new(kernel, centers)?.power_function(points)
}

/// Smallest eigenvalue of `A_X` against `q_X^{2 tau - d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub lambda_min: f64,
    pub q: f64,
    pub exponent: f64,
    pub q_power: f64,
    /// Empirical constant `lambda_min / q^{2 tau - d}`.
    pub ratio: f64,
}

pub fn min_eig_lower_bound_check(kernel: &RadialKernel, centers: &PointSet) -> Result<StabilityReport> {
    let q = centers.separation_distance()?;
    centers.check_distinct()?;
    let lambda_min = min_eigenvalue(&gram_entries(kernel, centers))?;
    let exponent = 2.0 * kernel.tau() - centers.dim() as f64;
    let q_power = q.powf(exponent);
    Ok(StabilityReport {
        n: centers.len(),
        lambda_min,
        q,
        exponent,
        q_power,
        ratio: lambda_min / q_power,
    })
}

/// `|s|_H^2 <= |A_X^{-1}| |X| |s|_{L2(X)}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NativeNormReport {
    pub lhs: f64,
    pub rhs: f64,
    pub inverse_norm: f64,
    pub n: usize,
    /// Normalized discrete norm `(1/|X|) sum_i s(x_i)^2`.
    pub discrete_l2_sq: f64,
    pub holds: bool,
}

pub fn native_norm_bound(s: &Interpolant) -> Result<NativeNormReport> {
    let a = gram_entries(&s.kernel, &s.centers);
    let n = s.centers.len();
    let values = &a * &s.coeffs;
    let lhs = s.coeffs.dot(&values);
    let inverse_norm = 1.0 / min_eigenvalue(&a)?;
    let discrete_l2_sq = values.norm_squared() / n as f64;
    let rhs = inverse_norm * n as f64 * discrete_l2_sq;
    Ok(NativeNormReport {
        lhs,
        rhs,
        inverse_norm,
        n,
        discrete_l2_sq,
        holds: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matern() -> RadialKernel {
        RadialKernel::matern_exp()
    }

    #[test]
    fn reproduces_kernel_translates() {
        let x = PointSet::equidistant(0.0, 1.0, 7);
        let values: Vec<f64> = x.iter().map(|p| matern().eval(p, x.point(0)).unwrap()).collect();
        let s = fit(&matern(), &x, &values).unwrap();
        assert!((s.coeffs()[0] - 1.0).abs() < 1e-12);
        assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let x = PointSet::equidistant(0.0, 1.0, 9);
        let s = fit(&matern(), &x, &[0.0; 9]).unwrap();
        assert!(s.coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(s.evaluate(&PointSet::from_1d(&[0.123])).unwrap(), vec![0.0]);
    }

    #[test]
    fn evaluate_matches_direct_sum() {
        let x = PointSet::equidistant(0.0, 1.0, 5);
        let values: Vec<f64> = x.iter().map(|p| (p[0] * (1.0 - p[0])).powf(0.41)).collect();
        let s = fit(&matern(), &x, &values).unwrap();
        let direct: f64 = s
            .coeffs()
            .iter()
            .zip(x.iter())
            .map(|(a, p)| a * (-(0.5 - p[0]).abs()).exp())
            .sum();
        let got = s.evaluate(&PointSet::from_1d(&[0.5])).unwrap()[0];
        assert!((got - direct).abs() < 1e-14);
        assert!(s.residual_at_nodes() < 1e-14);
    }

    #[test]
    fn power_function_two_points() {
        // explicit inverse of [[1, e], [e, 1]] with e = exp(-1)
        let e = (-1f64).exp();
        let b = (-0.5f64).exp();
        let det = 1.0 - e * e;
        let quad = (b * b + b * b - 2.0 * e * b * b) / det;
        let oracle = (1.0 - quad).sqrt();
        let x = PointSet::from_1d(&[0.0, 1.0]);
        let p = power_function(&matern(), &x, &PointSet::from_1d(&[0.5, 0.0, 1.0])).unwrap();
        assert!((p.values[0] - oracle).abs() < 1e-14);
        assert!(p.values[1] < 1e-6 && p.values[2] < 1e-6);
        let empty = power_function(&matern(), &PointSet::empty(1), &PointSet::from_1d(&[0.3])).unwrap();
        assert_eq!(empty.values, vec![1.0]);
    }

    #[test]
    fn two_point_stability() {
        let r = min_eig_lower_bound_check(&matern(), &PointSet::from_1d(&[0.0, 1.0])).unwrap();
        assert!((r.lambda_min - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert_eq!(r.q, 0.5);
        assert!((r.ratio - 1.264241117657115).abs() < 1e-12);
    }

    #[test]
    fn native_norm_single_center_is_tight() {
        let x = PointSet::from_1d(&[0.3]);
        let s = Interpolant::from_coeffs(&matern(), &x, vec![1.0]).unwrap();
        let r = native_norm_bound(&s).unwrap();
        assert!(r.holds);
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
        let zero = Interpolant::from_coeffs(&matern(), &x, vec![0.0]).unwrap();
        let r = native_norm_bound(&zero).unwrap();
        assert!(r.holds && r.lhs == 0.0 && r.rhs == 0.0);
    }

    #[test]
    fn duplicate_centers_rejected() {
        let x = PointSet::from_1d(&[0.0, 0.5, 0.5]);
        assert!(matches!(
            fit(&matern(), &x, &[1.0, 2.0, 3.0]),
            Err(Error::DuplicatePoints { first: 1, second: 2 })
        ));
    }

    #[test]
    fn smoothness_checked_against_dimension() {
        let x = PointSet::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(fit(&matern(), &x, &[1.0, 2.0]), Err(Error::Usage(_))));
        let k = matern().with_tau(1.5).unwrap();
        assert!(fit(&k, &x, &[1.0, 2.0]).is_ok());
    }
}
