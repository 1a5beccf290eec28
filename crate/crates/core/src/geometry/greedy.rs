use rayon::prelude::*;
use serde::Serialize;

use super::domain::{CandidateGrid, Domain};
use super::pointset::{distance_sq, PointSet};
use crate::error::{Error, Result};

/// Max-tree over squared distances; ties resolve to the lowest index.
struct ArgMaxTree {
    size: usize,
    val: Vec<f64>,
    arg: Vec<u32>,
}

impl ArgMaxTree {
    fn new(values: &[f64]) -> Self {
        let size = values.len().next_power_of_two();
        let mut val = vec![f64::NEG_INFINITY; 2 * size];
        let mut arg = vec![u32::MAX; 2 * size];
        for (i, &v) in values.iter().enumerate() {
            val[size + i] = v;
            arg[size + i] = i as u32;
        }
        let mut tree = Self { size, val, arg };
        for node in (1..size).rev() {
            tree.pull(node);
        }
        tree
    }

    #[inline]
    fn pull(&mut self, node: usize) {
        let (l, r) = (2 * node, 2 * node + 1);
        let pick = if self.val[r] > self.val[l] { r } else { l };
        self.val[node] = self.val[pick];
        self.arg[node] = self.arg[pick];
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut node = self.size + i;
        self.val[node] = v;
        while node > 1 {
            node /= 2;
            self.pull(node);
        }
    }

    fn max(&self) -> (usize, f64) {
        (self.arg[1] as usize, self.val[1])
    }
}

/// Fill and separation distance of one greedy prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyStats {
    pub m: usize,
    pub h: f64,
    /// `None` for the one-point prefix.
    pub q: Option<f64>,
    pub rho: Option<f64>,
}

/// Incremental farthest-point sampling over a domain's candidate grid.
///
/// Every step adds the grid point farthest from the current selection.
/// Fill distances of all prefixes come for free from the running maximum.
pub struct GreedyRun<'a> {
    grid: &'a CandidateGrid,
    min_d2: Vec<f64>,
    tree: ArgMaxTree,
    chosen: Vec<usize>,
    stats: Vec<GreedyStats>,
}

impl<'a> GreedyRun<'a> {
    /// Starts from the grid point closest to `seed`, or to the centroid.
    pub fn new(domain: &'a Domain, seed: Option<&[f64]>) -> Result<Self> {
        let grid = domain.candidate_grid();
        let start = match seed {
            Some(p) if p.len() != domain.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: domain.dim(),
                    got: p.len(),
                })
            }
            Some(p) => p.to_vec(),
            None => domain.centroid(),
        };
        let first = grid
            .closest_member(&start)
            .ok_or_else(|| Error::usage("candidate grid is empty"))?;
        let points = grid.points();
        let p = points.point(first);
        let min_d2: Vec<f64> = points
            .coords()
            .par_chunks(points.dim())
            .map(|g| distance_sq(g, p))
            .collect();
        let tree = ArgMaxTree::new(&min_d2);
        let h = tree.max().1.sqrt();
        Ok(Self {
            grid,
            min_d2,
            tree,
            chosen: vec![first],
            stats: vec![GreedyStats {
                m: 1,
                h,
                q: None,
                rho: None,
            }],
        })
    }

    /// Current fill distance.
    pub fn fill(&self) -> f64 {
        self.tree.max().1.max(0.0).sqrt()
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    /// Adds the farthest grid point and returns its grid index.
    pub fn step(&mut self) -> Result<usize> {
        let (next, d2) = self.tree.max();
        if d2 <= 0.0 {
            return Err(Error::usage(format!(
                "greedy selection exhausted the candidate grid after {} points",
                self.chosen.len()
            )));
        }
        let points = self.grid.points();
        let p = points.point(next).to_vec();
        let reach = d2.sqrt();
        let min_d2 = &mut self.min_d2;
        let tree = &mut self.tree;
        self.grid.for_each_in_cube(&p, reach, |g| {
            let dist = distance_sq(points.point(g), &p);
            if dist < min_d2[g] {
                min_d2[g] = dist;
                tree.set(g, dist);
            }
        });
        self.chosen.push(next);
        let prev_q = self.stats.last().and_then(|s| s.q).unwrap_or(f64::INFINITY);
        let q = prev_q.min(0.5 * reach);
        let h = self.fill();
        self.stats.push(GreedyStats {
            m: self.chosen.len(),
            h,
            q: Some(q),
            rho: Some(h / q),
        });
        Ok(next)
    }

    /// Runs until `n` points are selected.
    pub fn extend_to(&mut self, n: usize) -> Result<()> {
        while self.chosen.len() < n {
            self.step()?;
        }
        Ok(())
    }

    /// Runs until the fill distance drops strictly below `h`.
    pub fn extend_until_fill_below(&mut self, h: f64) -> Result<()> {
        while self.fill() >= h {
            self.step()?;
        }
        Ok(())
    }

    /// Selected grid indices in selection order.
    pub fn indices(&self) -> &[usize] {
        &self.chosen
    }

    /// Per-prefix statistics; entry `m - 1` describes the first `m` points.
    pub fn stats(&self) -> &[GreedyStats] {
        &self.stats
    }

    pub fn points(&self) -> PointSet {
        self.grid.points().subset(&self.chosen)
    }

    pub fn prefix(&self, m: usize) -> PointSet {
        self.grid.points().subset(&self.chosen[..m.min(self.chosen.len())])
    }
}

/// The first `n` points of the farthest-point sequence on `domain`.
pub fn geometric_greedy(domain: &Domain, n: usize, seed: Option<&[f64]>) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::usage("greedy selection needs n >= 1"));
    }
    let grid_len = domain.candidate_grid().len();
    if n > grid_len {
        return Err(Error::usage(format!(
            "{n} points requested but the candidate grid holds {grid_len}"
        )));
    }
    let mut run = GreedyRun::new(domain, seed)?;
    run.extend_to(n)?;
    Ok(run.points())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_from_zero() {
        let omega = Domain::unit_interval();
        let x = geometric_greedy(&omega, 3, Some(&[0.0])).unwrap();
        assert_eq!(x.coords(), &[0.0, 1.0, 0.5]);
        let x = geometric_greedy(&omega, 9, Some(&[0.0])).unwrap();
        assert_eq!(x.coords(), &[0.0, 1.0, 0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn default_seed_is_centroid() {
        let x = geometric_greedy(&Domain::unit_interval(), 3, None).unwrap();
        assert_eq!(x.coords(), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn too_many_points() {
        let omega = Domain::unit_interval().with_grid_spacing(0.25).unwrap();
        assert!(geometric_greedy(&omega, 5, None).is_ok());
        assert!(matches!(geometric_greedy(&omega, 6, None), Err(Error::Usage(_))));
    }

    #[test]
    fn stats_match_recomputation() {
        let omega = Domain::unit_disk().with_grid_spacing(0.02).unwrap();
        let mut run = GreedyRun::new(&omega, None).unwrap();
        run.extend_to(40).unwrap();
        for s in run.stats().iter().skip(1).step_by(7) {
            let x = run.prefix(s.m);
            assert_eq!(Some(x.separation_distance().unwrap()), s.q);
            assert_eq!(x.fill_distance(&omega).unwrap(), s.h);
        }
    }

    #[test]
    fn tree_ties_go_low() {
        let mut t = ArgMaxTree::new(&[1.0, 3.0, 3.0, 2.0, 0.5]);
        assert_eq!(t.max(), (1, 3.0));
        t.set(1, 0.0);
        assert_eq!(t.max(), (2, 3.0));
    }
}
