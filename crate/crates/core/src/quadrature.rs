//! Gauss–Legendre based quadrature rules on intervals, boxes and disks.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind, PointSet};

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_k
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(k, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_k(x)` and `P_k'(x)` by the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule: nodes with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: PointSet,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn new(nodes: PointSet, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::usage(format!(
                "{} quadrature nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::usage("quadrature weights must be positive"));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// `k`-point Gauss–Legendre on each panel `[breaks[i], breaks[i + 1]]`.
pub fn composite_on_breaks(breaks: &[f64], k: usize) -> Result<QuadRule> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::usage("panel breaks must be strictly increasing"));
    }
    let (x, w) = gauss_legendre(k);
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * k);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    QuadRule::new(PointSet::new(1, nodes)?, weights)
}

/// `panels` equal panels on `[a, b]` with `k` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, k: usize) -> Result<QuadRule> {
    if panels == 0 {
        return Err(Error::usage("at least one panel is needed"));
    }
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| {
            if i == panels {
                b
            } else {
                a + (b - a) * i as f64 / panels as f64
            }
        })
        .collect();
    composite_on_breaks(&breaks, k)
}

/// Refines the first and last panel of `breaks` geometrically toward the
/// outer endpoints: `levels` subpanels with ratio `1/2`.
pub fn graded_breaks(breaks: &[f64], levels: usize) -> Vec<f64> {
    let n = breaks.len();
    if n < 2 || levels == 0 {
        return breaks.to_vec();
    }
    let (a, b) = (breaks[0], breaks[n - 1]);
    let mut out = vec![a];
    let left = breaks[1] - a;
    for j in (1..=levels).rev() {
        out.push(a + left * 0.5f64.powi(j as i32));
    }
    if n == 2 {
        // a single panel is split in two and graded at both ends
        out.truncate(1);
        let half = 0.5 * (b - a);
        for j in (1..=levels).rev() {
            out.push(a + half * 0.5f64.powi(j as i32));
        }
        out.push(a + half);
        for j in 1..=levels {
            out.push(b - half * 0.5f64.powi(j as i32));
        }
        out.push(b);
        return out;
    }
    out.extend_from_slice(&breaks[1..n - 1]);
    let right = b - breaks[n - 2];
    for j in 1..=levels {
        out.push(b - right * 0.5f64.powi(j as i32));
    }
    out.push(b);
    out
}

/// Tensor product of composite Gauss–Legendre rules on a box.
pub fn tensor_box(lower: &[f64], upper: &[f64], panels: usize, k: usize) -> Result<QuadRule> {
    let d = lower.len();
    let axes: Vec<QuadRule> = lower
        .iter()
        .zip(upper)
        .map(|(&a, &b)| composite_gauss_legendre(a, b, panels, k))
        .collect::<Result<_>>()?;
    let m = axes[0].len();
    let total = m.pow(d as u32);
    let mut nodes = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    for lin in 0..total {
        let mut rem = lin;
        let mut w = 1.0;
        let start = nodes.len();
        nodes.resize(start + d, 0.0);
        for axis in (0..d).rev() {
            let i = rem % m;
            rem /= m;
            nodes[start + axis] = axes[axis].nodes().point(i)[0];
            w *= axes[axis].weights()[i];
        }
        weights.push(w);
    }
    QuadRule::new(PointSet::new(d, nodes)?, weights)
}

/// Polar rule on a disk: composite Gauss–Legendre in the radius (with the
/// Jacobian `r`) and in the angle.
pub fn polar_disk(center: [f64; 2], radius: f64, panels: usize, k: usize) -> Result<QuadRule> {
    let radial = composite_gauss_legendre(0.0, radius, panels, k)?;
    let angular = composite_gauss_legendre(0.0, 2.0 * PI, 4 * panels, k)?;
    let mut nodes = Vec::with_capacity(2 * radial.len() * angular.len());
    let mut weights = Vec::with_capacity(radial.len() * angular.len());
    for (r, wr) in radial.nodes().iter().zip(radial.weights()) {
        for (t, wt) in angular.nodes().iter().zip(angular.weights()) {
            nodes.push(center[0] + r[0] * t[0].cos());
            nodes.push(center[1] + r[0] * t[0].sin());
            weights.push(wr * wt * r[0]);
        }
    }
    QuadRule::new(PointSet::new(2, nodes)?, weights)
}

/// A general purpose rule for `domain` with `panels` panels per axis.
pub fn domain_rule(domain: &Domain, panels: usize, k: usize) -> Result<QuadRule> {
    match domain.kind() {
        DomainKind::Interval { a, b } => composite_gauss_legendre(*a, *b, panels, k),
        DomainKind::Box { lower, upper } => tensor_box(lower, upper, panels, k),
        DomainKind::Disk { center, radius } => polar_disk(*center, *radius, panels, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2k_minus_1() {
        for k in [1, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(k);
            for deg in 0..2 * k {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "k={k} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn known_two_point_rule() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(w.iter().all(|w| (w - 1.0).abs() < 1e-15));
    }

    #[test]
    fn graded_rule_resolves_endpoint_singularity() {
        let breaks = graded_breaks(&[0.0, 0.25, 0.5, 0.75, 1.0], 40);
        let rule = composite_on_breaks(&breaks, 16).unwrap();
        // integral of x^{-1/2} over [0, 1]
        let got = rule.integrate(|p| p[0].powf(-0.5));
        assert!((got - 2.0).abs() < 1e-6, "{got}");
        let single = composite_on_breaks(&graded_breaks(&[0.0, 1.0], 40), 16).unwrap();
        let got = single.integrate(|p| (p[0] * (1.0 - p[0])).powf(0.02));
        let oracle = statrs::function::beta::beta(1.02, 1.02);
        assert!((got - oracle).abs() < 1e-10);
    }

    #[test]
    fn disk_and_box_areas() {
        let disk = polar_disk([0.3, -0.2], 2.0, 4, 8).unwrap();
        assert!((disk.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        let r2 = disk.integrate(|p| (p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2));
        assert!((r2 - 8.0 * PI).abs() < 1e-11);
        let cube = tensor_box(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], 2, 4).unwrap();
        assert!((cube.integrate(|p| p[0] * p[1] * p[2]) - 0.5 * 2.0 * 4.5).abs() < 1e-12);
    }
}
