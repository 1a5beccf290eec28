//! Radial basis function kernels of finite smoothness.
//!
//! A kernel is stored as a radial profile `phi` together with the Sobolev
//! smoothness `tau` of its native space and, when known, the two constants
//! that sandwich its Fourier transform between multiples of
//! `(1 + |w|^2)^-tau`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{distance, PointSet};

/// Radial profile `r -> phi(r / length_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `exp(-r)`, the Matérn kernel of smoothness `tau = (d + 1) / 2`.
    MaternExp,
    /// Wendland `(1 - r)_+^2`, continuous, positive definite for `d <= 3`.
    WendlandC0,
    /// Wendland `(1 - r)_+^4 (4 r + 1)`, twice differentiable, `d <= 3`.
    WendlandC2,
}

impl Profile {
    fn eval(self, r: f64) -> f64 {
        match self {
            Profile::MaternExp => (-r).exp(),
            Profile::WendlandC0 => {
                let t = (1.0 - r).max(0.0);
                t * t
            }
            Profile::WendlandC2 => {
                let t = (1.0 - r).max(0.0);
                let t2 = t * t;
                t2 * t2 * (4.0 * r + 1.0)
            }
        }
    }
}

/// A radial kernel `k(x, y) = phi(|x - y|_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    name: String,
    profile: Profile,
    length_scale: f64,
    tau: f64,
    fourier_lower: Option<f64>,
    fourier_upper: Option<f64>,
}

impl RadialKernel {
    pub fn new(name: impl Into<String>, profile: Profile, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::usage(format!("smoothness tau must be positive, got {tau}")));
        }
        Ok(Self {
            name: name.into(),
            profile,
            length_scale: 1.0,
            tau,
            fourier_lower: None,
            fourier_upper: None,
        })
    }

    /// The Matérn kernel `exp(-r)` with `tau = 1`, i.e. the `d = 1` case.
    pub fn matern_exp() -> Self {
        let c = (2.0 / std::f64::consts::PI).sqrt();
        Self {
            name: "matern-exp".into(),
            profile: Profile::MaternExp,
            length_scale: 1.0,
            tau: 1.0,
            fourier_lower: Some(c),
            fourier_upper: Some(c),
        }
    }

    pub fn wendland_c0() -> Self {
        Self {
            name: "wendland-c0".into(),
            profile: Profile::WendlandC0,
            length_scale: 1.0,
            tau: 1.0,
            fourier_lower: None,
            fourier_upper: None,
        }
    }

    pub fn wendland_c2() -> Self {
        Self {
            name: "wendland-c2".into(),
            profile: Profile::WendlandC2,
            length_scale: 1.0,
            tau: 2.0,
            fourier_lower: None,
            fourier_upper: None,
        }
    }

    /// Rescales the profile to `phi(r / length_scale)`.
    ///
    /// The Fourier constants are dropped since they refer to the unit scale.
    pub fn with_length_scale(mut self, length_scale: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::usage(format!(
                "length scale must be positive, got {length_scale}"
            )));
        }
        if length_scale != 1.0 {
            self.fourier_lower = None;
            self.fourier_upper = None;
        }
        self.length_scale = length_scale;
        Ok(self)
    }

    /// Overrides the smoothness exponent, e.g. for Wendland kernels used
    /// in a dimension other than the one their default assumes.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::usage(format!("smoothness tau must be positive, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn fourier_bounds(&self) -> Option<(f64, f64)> {
        self.fourier_lower.zip(self.fourier_upper)
    }

    /// Radial profile evaluated at distance `r >= 0`.
    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        self.profile.eval(r / self.length_scale)
    }

    /// Closed-form Fourier transform of `x -> phi(|x|)` in one dimension,
    /// when the kernel has one.
    pub fn fourier_hat(&self, omega: f64) -> Option<f64> {
        match (self.profile, self.length_scale == 1.0) {
            (Profile::MaternExp, true) => Some((2.0 / std::f64::consts::PI).sqrt() / (omega * omega + 1.0)),
            _ => None,
        }
    }

    /// Checks `c (1 + w^2)^-tau <= hat(w) <= C (1 + w^2)^-tau` on the given
    /// frequencies. Returns `None` when the constants or the transform are
    /// unknown.
    pub fn fourier_sandwich_holds(&self, omegas: &[f64], rel_tol: f64) -> Option<bool> {
        let (lo, hi) = self.fourier_bounds()?;
        let mut ok = true;
        for &w in omegas {
            let hat = self.fourier_hat(w)?;
            let decay = (1.0 + w * w).powf(-self.tau);
            ok &= hat >= lo * decay * (1.0 - rel_tol) && hat <= hi * decay * (1.0 + rel_tol);
        }
        Some(ok)
    }

    /// `k(x, y)`; fails when the dimensions differ.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.phi(distance(x, y))
    }

    /// Kernel matrix between two point sets, rows indexed by `a`.
    pub fn cross_matrix(&self, a: &PointSet, b: &PointSet) -> Result<DMatrix<f64>> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
            self.eval_unchecked(a.point(i), b.point(j))
        }))
    }
}

/// Every kernel shipped with the library.
pub fn builtin_kernels() -> Vec<RadialKernel> {
    vec![
        RadialKernel::matern_exp(),
        RadialKernel::wendland_c0(),
        RadialKernel::wendland_c2(),
    ]
}

/// Looks a builtin kernel up by name.
pub fn lookup_kernel(name: &str) -> Result<RadialKernel> {
    builtin_kernels()
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::NotFound(format!("kernel '{name}'")))
}

/// Symmetric kernel matrix `A_X` on a set of pairwise distinct centers.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

/// Assembles `A_X`. Only the lower triangle is evaluated; the upper one is
/// mirrored so the result is exactly symmetric.
pub fn assemble_gram(kernel: &RadialKernel, centers: &PointSet) -> Result<GramMatrix> {
    centers.check_distinct()?;
    Ok(GramMatrix {
        entries: gram_entries(kernel, centers),
    })
}

pub(crate) fn gram_entries(kernel: &RadialKernel, centers: &PointSet) -> DMatrix<f64> {
    let n = centers.len();
    let mut a = DMatrix::zeros(n, n);
    let diag = kernel.phi(0.0);
    for j in 0..n {
        a[(j, j)] = diag;
        let xj = centers.point(j);
        for i in (j + 1)..n {
            let v = kernel.eval_unchecked(centers.point(i), xj);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}
