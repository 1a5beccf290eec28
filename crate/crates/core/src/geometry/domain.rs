use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use super::pointset::{distance_sq, PointSet};
use crate::error::{Error, Result};

/// Shape of a bounded domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Interval {
        a: f64,
        b: f64,
    },
    /// Axis-aligned box `[lower_0, upper_0] x ... x [lower_{d-1}, upper_{d-1}]`.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Closed disk in the plane.
    Disk {
        center: [f64; 2],
        radius: f64,
    },
}

/// Lattice points per axis used when no grid spacing is configured.
fn default_points_per_axis(dim: usize) -> f64 {
    match dim {
        1 => 4096.0,
        2 => 400.0,
        _ => 48.0,
    }
}

/// A bounded domain satisfying an interior cone condition with angle
/// `cone_angle` and radius `cone_radius`.
///
/// All suprema over the domain are taken over a finite candidate grid: a
/// regular lattice of spacing at most `grid_spacing`, restricted to the
/// domain. Interval and box grids contain the boundary corners exactly.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    cone_angle: f64,
    cone_radius: f64,
    grid_spacing: f64,
    grid: OnceLock<CandidateGrid>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.cone_angle == other.cone_angle
            && self.cone_radius == other.cone_radius
            && self.grid_spacing == other.grid_spacing
    }
}

impl Domain {
    pub fn new(kind: DomainKind) -> Result<Self> {
        match &kind {
            DomainKind::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::usage(format!("invalid interval [{a}, {b}]")));
                }
            }
            DomainKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::usage("box bounds must be non-empty and of equal length"));
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u))
                {
                    return Err(Error::usage("box lower bounds must lie strictly below upper bounds"));
                }
            }
            DomainKind::Disk { center, radius } => {
                if !(center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::usage("disk needs a finite center and positive radius"));
                }
            }
        }
        let mut domain = Self {
            kind,
            cone_angle: PI / 4.0,
            cone_radius: 1.0,
            grid_spacing: 1.0,
            grid: OnceLock::new(),
        };
        domain.cone_radius = 0.5 * domain.inradius();
        domain.grid_spacing = domain.diameter() / default_points_per_axis(domain.dim());
        Ok(domain)
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(DomainKind::Interval { a, b })
    }

    pub fn unit_interval() -> Self {
        Self::interval(0.0, 1.0).expect("valid interval")
    }

    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(DomainKind::Box { lower, upper })
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::new(DomainKind::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        Self::disk([0.0, 0.0], 1.0).expect("valid disk")
    }

    /// Sets the cone parameters; `angle` must lie in `(0, pi/2)`.
    pub fn with_cone(mut self, angle: f64, radius: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < PI / 2.0) {
            return Err(Error::usage(format!("cone angle {angle} outside (0, pi/2)")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::usage(format!("cone radius must be positive, got {radius}")));
        }
        self.cone_angle = angle;
        self.cone_radius = radius;
        Ok(self)
    }

    pub fn with_grid_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::usage(format!("grid spacing must be positive, got {spacing}")));
        }
        self.grid_spacing = spacing;
        self.grid = OnceLock::new();
        Ok(self)
    }

    /// Grid spacing `h_target / 20` for experiments reaching fill distance
    /// `h_target`.
    pub fn with_target_fill(self, h_target: f64) -> Result<Self> {
        self.with_grid_spacing(h_target / 20.0)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Box { lower, .. } => lower.len(),
            DomainKind::Disk { .. } => 2,
        }
    }

    pub fn cone_angle(&self) -> f64 {
        self.cone_angle
    }

    pub fn cone_radius(&self) -> f64 {
        self.cone_radius
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid_spacing
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
            DomainKind::Disk { radius, .. } => PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            DomainKind::Disk { radius, .. } => 2.0 * radius,
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => 0.5 * (b - a),
            DomainKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (u - l))
                .fold(f64::INFINITY, f64::min),
            DomainKind::Disk { radius, .. } => *radius,
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match &self.kind {
            DomainKind::Interval { a, b } => vec![0.5 * (a + b)],
            DomainKind::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            DomainKind::Disk { center, .. } => center.to_vec(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match &self.kind {
            DomainKind::Interval { a, b } => *a <= p[0] && p[0] <= *b,
            DomainKind::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| l <= x && x <= u),
            DomainKind::Disk { center, radius } => distance_sq(p, center) <= radius * radius * (1.0 + 1e-12),
        }
    }

    /// The candidate grid standing in for the domain, built on first use.
    pub fn candidate_grid(&self) -> &CandidateGrid {
        self.grid.get_or_init(|| CandidateGrid::build(self))
    }

    /// `c_Omega = pi^{-1/2} (vol(Omega) Gamma(d/2 + 1))^{1/d}`.
    pub(crate) fn c_omega(&self) -> f64 {
        let d = self.dim() as f64;
        (self.volume() * gamma(d / 2.0 + 1.0)).powf(1.0 / d) / PI.sqrt()
    }
}

/// Regular lattice restricted to a domain.
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    /// Lattice index to member index, `u32::MAX` for points outside.
    lookup: Vec<u32>,
    points: PointSet,
}

const OUTSIDE: u32 = u32::MAX;

impl CandidateGrid {
    fn build(domain: &Domain) -> Self {
        let (lo, hi): (Vec<f64>, Vec<f64>) = match domain.kind() {
            DomainKind::Interval { a, b } => (vec![*a], vec![*b]),
            DomainKind::Box { lower, upper } => (lower.clone(), upper.clone()),
            DomainKind::Disk { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        };
        let delta = domain.grid_spacing();
        let mut shape = Vec::with_capacity(lo.len());
        let mut spacing = Vec::with_capacity(lo.len());
        for (l, h) in lo.iter().zip(&hi) {
            let cells = ((h - l) / delta).ceil().max(1.0) as usize;
            shape.push(cells + 1);
            spacing.push((h - l) / cells as f64);
        }
        let total: usize = shape.iter().product();
        let mut lookup = vec![OUTSIDE; total];
        let mut coords = Vec::new();
        let mut p = vec![0.0; lo.len()];
        let mut members = 0u32;
        for (lin, slot) in lookup.iter_mut().enumerate() {
            let mut rem = lin;
            for k in (0..lo.len()).rev() {
                let i = rem % shape[k];
                rem /= shape[k];
                p[k] = if i + 1 == shape[k] {
                    hi[k]
                } else {
                    lo[k] + i as f64 * spacing[k]
                };
            }
            if domain.contains(&p) {
                *slot = members;
                members += 1;
                coords.extend_from_slice(&p);
            }
        }
        Self {
            origin: lo,
            spacing,
            shape,
            lookup,
            points: PointSet::new(domain.dim(), coords).expect("finite grid"),
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest lattice spacing; sup computations are accurate to this.
    pub fn resolution(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// Calls `f` with the member index of every grid point inside the
    /// axis-aligned cube of half-width `radius` around `p`.
    pub(crate) fn for_each_in_cube(&self, p: &[f64], radius: f64, mut f: impl FnMut(usize)) {
        let d = self.shape.len();
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        for k in 0..d {
            let a = ((p[k] - radius - self.origin[k]) / self.spacing[k]).floor();
            let b = ((p[k] + radius - self.origin[k]) / self.spacing[k]).ceil();
            let max = (self.shape[k] - 1) as f64;
            if b < 0.0 || a > max {
                return;
            }
            lo[k] = a.max(0.0) as usize;
            hi[k] = b.min(max) as usize;
        }
        let mut idx = lo.clone();
        loop {
            let mut lin = 0usize;
            for k in 0..d {
                lin = lin * self.shape[k] + idx[k];
            }
            let m = self.lookup[lin];
            if m != OUTSIDE {
                f(m as usize);
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if idx[k] < hi[k] {
                    idx[k] += 1;
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }

    /// Member closest to `p`, lowest index on ties.
    pub fn closest_member(&self, p: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        let mut radius = self.resolution();
        let extent = self
            .shape
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &s)| n as f64 * s)
            .fold(0.0, f64::max);
        loop {
            self.for_each_in_cube(p, radius, |m| {
                let d2 = distance_sq(p, self.points.point(m));
                match best {
                    Some((bm, bd)) if d2 > bd || (d2 == bd && m > bm) => {}
                    _ => best = Some((m, d2)),
                }
            });
            if let Some((m, d2)) = best {
                if d2.sqrt() <= radius {
                    return Some(m);
                }
            }
            if radius > 2.0 * extent + self.resolution() {
                // p is far outside the lattice: fall back to a full scan
                return best.map(|(m, _)| m).or_else(|| {
                    (0..self.len()).min_by(|&a, &b| {
                        distance_sq(p, self.points.point(a)).total_cmp(&distance_sq(p, self.points.point(b)))
                    })
                });
            }
            radius *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_members_lie_inside() {
        for domain in [
            Domain::unit_interval(),
            Domain::unit_disk(),
            Domain::cuboid(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap(),
        ] {
            let grid = domain.candidate_grid();
            assert!(!grid.is_empty());
            assert!(grid.points().iter().all(|p| domain.contains(p)));
        }
    }

    #[test]
    fn interval_grid_has_exact_endpoints() {
        let d = Domain::unit_interval().with_grid_spacing(0.3).unwrap();
        let g = d.candidate_grid();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs.first(), Some(&0.0));
        assert_eq!(xs.last(), Some(&1.0));
        assert_eq!(xs.len(), 5);
    }

    #[test]
    fn default_cone_radius_is_half_inradius() {
        assert_eq!(Domain::unit_interval().cone_radius(), 0.25);
        assert_eq!(Domain::unit_disk().cone_radius(), 0.5);
        assert!(Domain::unit_interval().with_cone(PI / 2.0, 0.1).is_err());
    }

    #[test]
    fn closest_member_on_disk() {
        let d = Domain::unit_disk().with_grid_spacing(0.1).unwrap();
        let g = d.candidate_grid();
        let m = g.closest_member(&[0.0, 0.0]).unwrap();
        assert!(distance_sq(g.points().point(m), &[0.0, 0.0]) < 1e-20);
        let far = g.closest_member(&[5.0, 0.0]).unwrap();
        assert!((g.points().point(far)[0] - 1.0).abs() < 1e-12);
    }
}
