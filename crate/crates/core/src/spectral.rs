//! Nyström approximation of the Mercer eigendecomposition and norms in the
//! power spaces `H_theta`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, PointSet};
use crate::interpolation::check_smoothness;
use crate::io::{csv_table, fmt_f64};
use crate::kernels::RadialKernel;
use crate::quadrature::{domain_rule, QuadRule};

type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Nodes per panel of the default Nyström rule.
pub const NYSTROM_ORDER: usize = 8;

/// Quadrature-weighted means below this are treated as zero when fixing
/// eigenfunction signs.
const SIGN_TIE: f64 = 1e-10;

/// Truncated eigenpairs `(lambda_j, phi_j)` of the integral operator
/// `(T f)(x) = int k(x, y) f(y) dy`, discretized on a quadrature rule.
///
/// Eigenfunctions are stored by their values at the quadrature nodes and
/// evaluated elsewhere through the Nyström extension
/// `phi_j(x) = lambda_j^{-1} sum_k w_k k(x, z_k) phi_j(z_k)`.
#[derive(Clone)]
pub struct SpectralModel {
    kernel: KernelFn,
    radial: Option<RadialKernel>,
    rule: QuadRule,
    eigvals: Vec<f64>,
    /// `phi_j(z_k)` in row `k`, column `j`.
    values: DMatrix<f64>,
    warnings: Vec<String>,
}

impl fmt::Debug for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralModel")
            .field("kernel", &self.radial.as_ref().map(|k| k.name()))
            .field("nodes", &self.rule.len())
            .field("rank", &self.eigvals.len())
            .finish()
    }
}

/// Composite Gauss–Legendre rule with [`NYSTROM_ORDER`] nodes per panel
/// and at least `nodes` nodes in total (per axis for boxes and disks).
pub fn nystrom_rule(domain: &Domain, nodes: usize) -> Result<QuadRule> {
    domain_rule(domain, nodes.div_ceil(NYSTROM_ORDER).max(1), NYSTROM_ORDER)
}

pub fn nystrom_decompose(
    kernel: &RadialKernel,
    domain: &Domain,
    rank: usize,
    rule: &QuadRule,
) -> Result<SpectralModel> {
    check_smoothness(kernel, domain.dim())?;
    let k = kernel.clone();
    let mut model = SpectralModel::from_kernel_fn(move |x, y| k.eval_unchecked(x, y), rank, rule)?;
    model.radial = Some(kernel.clone());
    Ok(model)
}

impl SpectralModel {
    /// Decomposition for an arbitrary symmetric positive semidefinite kernel.
    pub fn from_kernel_fn(
        kernel: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        rank: usize,
        rule: &QuadRule,
    ) -> Result<Self> {
        let n = rule.len();
        if rank == 0 {
            return Err(Error::usage("spectral rank must be positive"));
        }
        if n < 4 * rank {
            return Err(Error::usage(format!(
                "rank {rank} needs at least {} quadrature nodes, rule has {n}",
                4 * rank
            )));
        }
        let nodes = rule.nodes();
        let sqrt_w: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = sqrt_w[i] * kernel(nodes.point(i), nodes.point(j)) * sqrt_w[j];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
        let mut warnings = Vec::new();
        let positive = order.iter().take_while(|&&i| eig.eigenvalues[i] > 0.0).count();
        let kept = rank.min(positive);
        if kept < rank {
            warnings.push(format!("only {kept} positive eigenvalues; rank truncated from {rank}"));
        }
        if kept == 0 {
            return Err(Error::Degenerate(
                "kernel has no positive eigenvalue on the rule".into(),
            ));
        }
        let eigvals: Vec<f64> = order[..kept].iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut values = DMatrix::zeros(n, kept);
        for (col, &i) in order[..kept].iter().enumerate() {
            let v = eig.eigenvectors.column(i);
            let mut phi: DVector<f64> = DVector::from_fn(n, |k, _| v[k] / sqrt_w[k]);
            let mean: f64 = phi.iter().zip(rule.weights()).map(|(p, w)| p * w).sum();
            let flip = if mean.abs() > SIGN_TIE {
                mean < 0.0
            } else {
                phi.iter().find(|p| p.abs() > 0.0).is_some_and(|&p| p < 0.0)
            };
            if flip {
                phi.neg_mut();
            }
            values.set_column(col, &phi);
        }
        Ok(Self {
            kernel: Arc::new(kernel),
            radial: None,
            rule: rule.clone(),
            eigvals,
            values,
            warnings,
        })
    }

    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn radial_kernel(&self) -> Option<&RadialKernel> {
        self.radial.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Values `phi_j(z_k)` at the quadrature nodes.
    pub fn node_values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// A copy keeping only the leading `m` eigenpairs.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.rank());
        Self {
            kernel: self.kernel.clone(),
            radial: self.radial.clone(),
            rule: self.rule.clone(),
            eigvals: self.eigvals[..m].to_vec(),
            values: self.values.columns(0, m).into_owned(),
            warnings: self.warnings.clone(),
        }
    }

    /// `phi_j(x)` for every point (rows) and retained index `j` (columns).
    pub fn eigenfunctions_at(&self, points: &PointSet) -> Result<DMatrix<f64>> {
        let nodes = self.rule.nodes();
        if points.dim() != nodes.dim() {
            return Err(Error::DimensionMismatch {
                expected: nodes.dim(),
                got: points.dim(),
            });
        }
        let b = DMatrix::from_fn(points.len(), nodes.len(), |i, k| {
            (self.kernel)(points.point(i), nodes.point(k)) * self.rule.weights()[k]
        });
        let mut out = b * &self.values;
        for (j, lambda) in self.eigvals.iter().enumerate() {
            out.column_mut(j).scale_mut(1.0 / lambda);
        }
        Ok(out)
    }

    /// Discrete inner products `<f, phi_j>` on the quadrature rule.
    pub fn coefficients_of_values(&self, values_at_nodes: &[f64]) -> Result<Vec<f64>> {
        if values_at_nodes.len() != self.rule.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rule.len(),
                got: values_at_nodes.len(),
            });
        }
        let wf = DVector::from_fn(self.rule.len(), |k, _| self.rule.weights()[k] * values_at_nodes[k]);
        Ok((self.values.transpose() * wf).iter().copied().collect())
    }

    pub fn coefficients(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let v: Vec<f64> = self.rule.nodes().iter().map(f).collect();
        self.coefficients_of_values(&v).expect("one value per node")
    }

    /// Values at the nodes of `sum_j c_j phi_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = coeffs.len().min(self.rank());
        let c = DVector::from_column_slice(&coeffs[..m]);
        (self.values.columns(0, m) * c).iter().copied().collect()
    }

    /// `max |<phi_i, phi_j> - delta_ij|` on the rule.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut wv = self.values.clone();
        for (k, w) in self.rule.weights().iter().enumerate() {
            wv.row_mut(k).scale_mut(*w);
        }
        let gram = self.values.transpose() * wv;
        let mut worst = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `sum_j lambda_j` against `int k(x, x) dx`.
    pub fn trace_check(&self) -> (f64, f64) {
        let sum: f64 = self.eigvals.iter().sum();
        let trace = self.rule.integrate(|p| (self.kernel)(p, p));
        (sum, trace)
    }

    /// Largest `|sum_{j<=m} lambda_j phi_j(x) phi_j(y) - k(x, y)|` over pairs.
    pub fn mercer_error(&self, xs: &PointSet, ys: &PointSet, m: usize) -> Result<f64> {
        if xs.len() != ys.len() {
            return Err(Error::usage("pair lists differ in length"));
        }
        let model = self.truncated(m);
        let px = model.eigenfunctions_at(xs)?;
        let py = model.eigenfunctions_at(ys)?;
        let mut worst = 0.0f64;
        for i in 0..xs.len() {
            let approx: f64 = (0..model.rank())
                .map(|j| model.eigvals[j] * px[(i, j)] * py[(i, j)])
                .sum();
            worst = worst.max((approx - (self.kernel)(xs.point(i), ys.point(i))).abs());
        }
        Ok(worst)
    }

    /// CSV with columns `j, lambda_j`, `j` starting at 1.
    pub fn spectrum_csv(&self) -> String {
        csv_table(
            &["j", "lambda_j"],
            self.eigvals
                .iter()
                .enumerate()
                .map(|(j, l)| vec![(j + 1).to_string(), fmt_f64(*l)]),
        )
    }
}

/// Truncated norm `(sum_j c_j^2 / lambda_j^theta)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSpaceNorm {
    pub theta: f64,
    pub value: f64,
    pub truncation_rank: usize,
    /// Contribution of the last decade `j in (m/10, m]`, same units as
    /// `value`.
    pub tail_estimate: f64,
}

pub fn power_norm_of_coeffs(model: &SpectralModel, coeffs: &[f64], theta: f64) -> Result<PowerSpaceNorm> {
    if !(theta >= 0.0) {
        return Err(Error::usage(format!("theta must be nonnegative, got {theta}")));
    }
    let m = coeffs.len().min(model.rank());
    let terms: Vec<f64> = (0..m)
        .map(|j| coeffs[j] * coeffs[j] / model.eigvals[j].powf(theta))
        .collect();
    let tail: f64 = terms[m / 10..].iter().sum();
    Ok(PowerSpaceNorm {
        theta,
        value: terms.iter().sum::<f64>().sqrt(),
        truncation_rank: m,
        tail_estimate: tail.sqrt(),
    })
}

pub fn power_norm(model: &SpectralModel, f: impl Fn(&[f64]) -> f64, theta: f64) -> Result<PowerSpaceNorm> {
    power_norm_of_coeffs(model, &model.coefficients(f), theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Holds,
    Violated,
    Inconclusive,
}

/// `|g|_theta <= |g|_theta1^{1-s} |g|_theta2^s` with
/// `s = (theta - theta1) / (theta2 - theta1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub exponent: f64,
    pub status: CheckStatus,
}

/// Retained energy below this fraction of the quadrature energy counts as
/// negligible.
const NEGLIGIBLE_ENERGY: f64 = 1e-12;

pub fn holder_check_coeffs(
    model: &SpectralModel,
    coeffs: &[f64],
    theta1: f64,
    theta: f64,
    theta2: f64,
) -> Result<HolderReport> {
    if !(theta1 >= 0.0 && theta1 < theta2 && theta1 <= theta && theta <= theta2) {
        return Err(Error::usage(format!(
            "need 0 <= theta1 <= theta <= theta2 with theta1 < theta2, got {theta1}, {theta}, {theta2}"
        )));
    }
    let s = (theta - theta1) / (theta2 - theta1);
    let lhs = power_norm_of_coeffs(model, coeffs, theta)?.value;
    let a = power_norm_of_coeffs(model, coeffs, theta1)?.value;
    let b = power_norm_of_coeffs(model, coeffs, theta2)?.value;
    let rhs = a.powf(1.0 - s) * b.powf(s);
    let status = if lhs <= rhs * (1.0 + 1e-6) {
        CheckStatus::Holds
    } else {
        CheckStatus::Violated
    };
    Ok(HolderReport {
        lhs,
        rhs,
        exponent: s,
        status,
    })
}

pub fn holder_check(
    model: &SpectralModel,
    f: impl Fn(&[f64]) -> f64,
    theta1: f64,
    theta: f64,
    theta2: f64,
) -> Result<HolderReport> {
    let values: Vec<f64> = model.rule.nodes().iter().map(f).collect();
    let coeffs = model.coefficients_of_values(&values)?;
    let mut report = holder_check_coeffs(model, &coeffs, theta1, theta, theta2)?;
    let energy: f64 = coeffs.iter().map(|c| c * c).sum();
    let total = model
        .rule
        .integrate_values(&values.iter().map(|v| v * v).collect::<Vec<_>>());
    if energy <= NEGLIGIBLE_ENERGY * total || energy == 0.0 {
        report.status = CheckStatus::Inconclusive;
    }
    Ok(report)
}

/// Both norms of the embedding `H_theta_b -> H_theta_a` at fixed rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestingReport {
    pub norm_a: f64,
    pub norm_b: f64,
    /// `max(1, lambda_1^{(theta_b - theta_a) / 2})`.
    pub factor: f64,
    pub holds: bool,
}

pub fn nested_power_spaces_check_coeffs(
    model: &SpectralModel,
    coeffs: &[f64],
    theta_a: f64,
    theta_b: f64,
) -> Result<NestingReport> {
    if theta_a > theta_b {
        return Err(Error::usage(format!(
            "need theta_a <= theta_b, got {theta_a} > {theta_b}"
        )));
    }
    let norm_a = power_norm_of_coeffs(model, coeffs, theta_a)?.value;
    let norm_b = power_norm_of_coeffs(model, coeffs, theta_b)?.value;
    let factor = model.eigvals[0].powf((theta_b - theta_a) / 2.0).max(1.0);
    Ok(NestingReport {
        norm_a,
        norm_b,
        factor,
        holds: norm_a <= factor * norm_b * (1.0 + 1e-12),
    })
}

pub fn nested_power_spaces_check(
    model: &SpectralModel,
    f: impl Fn(&[f64]) -> f64,
    theta_a: f64,
    theta_b: f64,
) -> Result<NestingReport> {
    nested_power_spaces_check_coeffs(model, &model.coefficients(f), theta_a, theta_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_gauss_legendre;

    fn model(nodes: usize, rank: usize) -> SpectralModel {
        let omega = Domain::unit_interval();
        let rule = nystrom_rule(&omega, nodes).unwrap();
        nystrom_decompose(&RadialKernel::matern_exp(), &omega, rank, &rule).unwrap()
    }

    #[test]
    fn rank_one_kernel() {
        let rule = composite_gauss_legendre(0.0, 1.0, 4, 8).unwrap();
        let m = SpectralModel::from_kernel_fn(|x, y| x[0] * y[0], 1, &rule).unwrap();
        assert!((m.eigenvalues()[0] - 1.0 / 3.0).abs() < 1e-14);
        let phi = m.eigenfunctions_at(&PointSet::from_1d(&[0.5])).unwrap();
        assert!((phi[(0, 0)] - 0.5 * 3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn single_mode_norms() {
        let m = model(256, 32);
        let mut c = vec![0.0; 32];
        c[0] = 1.0;
        assert!((power_norm_of_coeffs(&m, &c, 0.0).unwrap().value - 1.0).abs() < 1e-15);
        let l1 = m.eigenvalues()[0];
        assert!((power_norm_of_coeffs(&m, &c, 1.0).unwrap().value - l1.powf(-0.5)).abs() < 1e-13);
        let h = holder_check_coeffs(&m, &c, 0.0, 0.5, 1.0).unwrap();
        assert!((h.lhs - h.rhs).abs() <= 1e-8 * h.rhs);
        let nest = nested_power_spaces_check_coeffs(&m, &c, 0.2, 0.7).unwrap();
        assert!((nest.norm_a / nest.norm_b - l1.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn eigenfunctions_orthonormal_with_positive_mean() {
        let m = model(512, 128);
        assert!(m.orthonormality_residual() < 1e-6);
        let w = m.rule().weights();
        for j in 0..m.rank() {
            let mean: f64 = (0..w.len()).map(|k| w[k] * m.node_values()[(k, j)]).sum();
            assert!(mean > -SIGN_TIE);
        }
        let (sum, trace) = m.trace_check();
        assert!(sum <= trace * (1.0 + 1e-3));
    }

    #[test]
    fn extension_reproduces_node_values() {
        let m = model(128, 16);
        let nodes = m.rule().nodes().subset(&[0, 17, 99]);
        let ext = m.eigenfunctions_at(&nodes).unwrap();
        for (row, k) in [0, 17, 99].into_iter().enumerate() {
            for j in 0..m.rank() {
                assert!((ext[(row, j)] - m.node_values()[(k, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rule_too_small_for_rank() {
        let rule = composite_gauss_legendre(0.0, 1.0, 1, 8).unwrap();
        let omega = Domain::unit_interval();
        assert!(nystrom_decompose(&RadialKernel::matern_exp(), &omega, 3, &rule).is_err());
    }

    #[test]
    fn spectrum_csv_layout() {
        let m = model(64, 4);
        let csv = m.spectrum_csv();
        assert!(csv.starts_with("j,lambda_j\n1,"));
        assert_eq!(csv.lines().count(), 5);
    }
}
