use std::sync::OnceLock;

use super::index::NeighborIndex;
use super::Domain;
use crate::error::{Error, Result};
use crate::io::fmt_f64;

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance_sq(a, b).sqrt()
}

#[inline]
pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// An ordered list of points in `R^d`, stored row-major.
///
/// The separation distance is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    separation: OnceLock<f64>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("point dimension must be positive"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::usage(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("point coordinates must be finite"));
        }
        Ok(Self {
            dim,
            coords,
            separation: OnceLock::new(),
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            separation: OnceLock::new(),
        }
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::usage("cannot infer dimension of an empty point list"))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// One-dimensional points. Panics on non-finite input.
    pub fn from_1d(xs: &[f64]) -> Self {
        Self::new(1, xs.to_vec()).expect("finite coordinates")
    }

    /// `n` equally spaced points on `[a, b]`, both endpoints included.
    pub fn equidistant(a: f64, b: f64, n: usize) -> Self {
        let xs: Vec<f64> = match n {
            0 => Vec::new(),
            1 => vec![0.5 * (a + b)],
            _ => {
                let step = (b - a) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
                    .collect()
            }
        };
        Self::from_1d(&xs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
            separation: OnceLock::new(),
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self {
            dim: self.dim,
            coords,
            separation: OnceLock::new(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|c| c * factor).collect(),
            separation: OnceLock::new(),
        }
    }

    /// Fails with the lowest pair of indices holding identical points.
    pub fn check_distinct(&self) -> Result<()> {
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            self.point(i)
                .iter()
                .zip(self.point(j))
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let dup = order
            .windows(2)
            .filter(|w| self.point(w[0]) == self.point(w[1]))
            .map(|w| (w[0], w[1]))
            .min();
        match dup {
            Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
            None => Ok(()),
        }
    }

    /// Half the smallest pairwise distance, `q_X`.
    pub fn separation_distance(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::usage("separation distance needs at least two points"));
        }
        Ok(*self.separation.get_or_init(|| 0.5 * self.min_pair_distance()))
    }

    fn min_pair_distance(&self) -> f64 {
        let n = self.len();
        if n <= 64 || self.dim > 3 {
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in (i + 1)..n {
                    best = best.min(distance_sq(self.point(i), self.point(j)));
                }
            }
            return best.sqrt();
        }
        let index = NeighborIndex::build(self);
        (0..n)
            .map(|i| {
                index
                    .nearest_excluding(self.point(i), i)
                    .map_or(f64::INFINITY, |(_, d)| d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Fill distance `h_{X, Omega}` measured on the domain's candidate grid.
    pub fn fill_distance(&self, domain: &Domain) -> Result<f64> {
        super::fill_distance(self, domain)
    }

    /// `rho_X = h_X / q_X`.
    pub fn uniformity(&self, domain: &Domain) -> Result<f64> {
        Ok(self.fill_distance(domain)? / self.separation_distance()?)
    }

    /// CSV with a `# dim=d` header and one point per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# dim={}\n", self.dim);
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|&c| fmt_f64(c)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`PointSet::to_csv`]. Blank lines and
    /// further `#` comment lines are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut coords = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if dim.is_none() {
                    let value = comment
                        .trim()
                        .strip_prefix("dim=")
                        .ok_or_else(|| Error::Parse(format!("line {}: expected `# dim=d` header", lineno + 1)))?;
                    let d: usize = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad dimension `{value}`", lineno + 1)))?;
                    if d == 0 {
                        return Err(Error::Parse("dimension must be positive".into()));
                    }
                    dim = Some(d);
                }
                continue;
            }
            let d = dim.ok_or_else(|| Error::Parse("missing `# dim=d` header".into()))?;
            let before = coords.len();
            for cell in line.split(',') {
                let c: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number `{}`", lineno + 1, cell.trim())))?;
                if !c.is_finite() {
                    return Err(Error::Parse(format!("line {}: non-finite coordinate", lineno + 1)));
                }
                coords.push(c);
            }
            if coords.len() - before != d {
                return Err(Error::Parse(format!(
                    "line {}: expected {d} columns, found {}",
                    lineno + 1,
                    coords.len() - before
                )));
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("missing `# dim=d` header".into()))?;
        Self::new(dim, coords)
    }

    /// Index of each point of `self` inside `superset`, matched exactly.
    pub fn positions_in(&self, superset: &PointSet) -> Result<Vec<usize>> {
        if self.dim != superset.dim {
            return Err(Error::DimensionMismatch {
                expected: superset.dim,
                got: self.dim,
            });
        }
        let index = NeighborIndex::build(superset);
        self.iter()
            .enumerate()
            .map(|(i, p)| match index.nearest(p) {
                Some((j, d)) if d == 0.0 => Ok(j),
                _ => Err(Error::usage(format!("point {i} is not contained in the superset"))),
            })
            .collect()
    }
}
