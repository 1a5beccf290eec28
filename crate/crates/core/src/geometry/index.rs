use std::collections::HashMap;

use super::pointset::{distance_sq, PointSet};

type CellKey = [i64; 3];

/// Uniform bucket grid over a point set for nearest-neighbour and radius
/// queries. Dimensions above three fall back to linear scans.
pub(crate) struct NeighborIndex<'a> {
    points: &'a PointSet,
    cell: f64,
    buckets: HashMap<CellKey, Vec<u32>>,
    lo: CellKey,
    hi: CellKey,
}

impl<'a> NeighborIndex<'a> {
    pub fn build(points: &'a PointSet) -> Self {
        let d = points.dim();
        let n = points.len();
        let mut index = Self {
            points,
            cell: 1.0,
            buckets: HashMap::new(),
            lo: [0; 3],
            hi: [0; 3],
        };
        if d > 3 || n == 0 {
            return index;
        }
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            for k in 0..d {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        let extent = (0..d).map(|k| max[k] - min[k]).fold(0.0, f64::max);
        let cell = if extent > 0.0 {
            extent / (n as f64).powf(1.0 / d as f64).max(1.0)
        } else {
            1.0
        };
        index.cell = cell;
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for d_unused in d..3 {
            lo[d_unused] = 0;
            hi[d_unused] = 0;
        }
        for (i, p) in points.iter().enumerate() {
            let key = index.key(p);
            for k in 0..d {
                lo[k] = lo[k].min(key[k]);
                hi[k] = hi[k].max(key[k]);
            }
            index.buckets.entry(key).or_default().push(i as u32);
        }
        index.lo = lo;
        index.hi = hi;
        index
    }

    fn key(&self, p: &[f64]) -> CellKey {
        let mut key = [0i64; 3];
        for (k, &c) in p.iter().enumerate() {
            key[k] = (c / self.cell).floor() as i64;
        }
        key
    }

    fn linear(&self) -> bool {
        self.points.dim() > 3
    }

    /// Nearest point and its distance.
    pub fn nearest(&self, p: &[f64]) -> Option<(usize, f64)> {
        self.nearest_filtered(p, usize::MAX)
    }

    /// Nearest point other than the one at index `skip`.
    pub fn nearest_excluding(&self, p: &[f64], skip: usize) -> Option<(usize, f64)> {
        self.nearest_filtered(p, skip)
    }

    fn nearest_filtered(&self, p: &[f64], skip: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let consider = |i: usize, best: &mut Option<(usize, f64)>| {
            if i == skip {
                return;
            }
            let d2 = distance_sq(p, self.points.point(i));
            match best {
                Some((bi, bd)) if d2 > *bd || (d2 == *bd && i > *bi) => {}
                _ => *best = Some((i, d2)),
            }
        };
        if self.linear() {
            for i in 0..self.points.len() {
                consider(i, &mut best);
            }
            return best.map(|(i, d2)| (i, d2.sqrt()));
        }
        if self.buckets.is_empty() {
            return None;
        }
        let d = self.points.dim();
        let center = self.key(p);
        // Rings beyond this radius contain no occupied cell.
        let max_ring = (0..d)
            .map(|k| (center[k] - self.lo[k]).abs().max((self.hi[k] - center[k]).abs()))
            .max()
            .unwrap_or(0);
        let mut ring = 0i64;
        loop {
            self.visit_shell(&center, ring, |i| consider(i, &mut best));
            if let Some((_, d2)) = best {
                let reach = ring as f64 * self.cell;
                if d2 <= reach * reach {
                    break;
                }
            }
            if ring >= max_ring {
                break;
            }
            ring += 1;
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Indices of points with `|x - p| <= radius` (closed) or `< radius`
    /// (open), sorted ascending.
    pub fn within(&self, p: &[f64], radius: f64, closed: bool) -> Vec<usize> {
        let r2 = radius * radius;
        let keep = |i: usize| {
            let d2 = distance_sq(p, self.points.point(i));
            if closed {
                d2 <= r2
            } else {
                d2 < r2
            }
        };
        let mut out = Vec::new();
        if self.linear() {
            out.extend((0..self.points.len()).filter(|&i| keep(i)));
            return out;
        }
        let d = self.points.dim();
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for k in 0..d {
            lo[k] = ((p[k] - radius) / self.cell).floor() as i64;
            hi[k] = ((p[k] + radius) / self.cell).floor() as i64;
            lo[k] = lo[k].max(self.lo[k]);
            hi[k] = hi[k].min(self.hi[k]);
            if lo[k] > hi[k] {
                return out;
            }
        }
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    if let Some(bucket) = self.buckets.get(&[a, b, c]) {
                        out.extend(bucket.iter().map(|&i| i as usize).filter(|&i| keep(i)));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn visit_shell(&self, center: &CellKey, ring: i64, mut f: impl FnMut(usize)) {
        let d = self.points.dim();
        let span = |k: usize| if k < d { -ring..=ring } else { 0..=0 };
        for a in span(0) {
            for b in span(1) {
                for c in span(2) {
                    if a.abs().max(b.abs()).max(c.abs()) != ring {
                        continue;
                    }
                    let key = [center[0] + a, center[1] + b, center[2] + c];
                    if let Some(bucket) = self.buckets.get(&key) {
                        for &i in bucket {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scatter(n: usize, d: usize) -> PointSet {
        let mut coords = Vec::new();
        let mut s = 0.137_f64;
        for _ in 0..n * d {
            s = (s * 9301.0 + 0.2113).fract();
            coords.push(s * 3.0 - 1.0);
        }
        PointSet::new(d, coords).unwrap()
    }

    #[test]
    fn nearest_matches_brute_force() {
        for d in 1..=4 {
            let pts = scatter(200, d);
            let index = NeighborIndex::build(&pts);
            let queries = scatter(50, d).scaled(1.7);
            for q in queries.iter() {
                let brute = (0..pts.len())
                    .map(|i| (i, distance_sq(q, pts.point(i))))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .unwrap();
                let (i, dist) = index.nearest(q).unwrap();
                assert_eq!(i, brute.0);
                assert_eq!(dist, brute.1.sqrt());
            }
        }
    }

    #[test]
    fn within_matches_brute_force() {
        let pts = scatter(300, 2);
        let index = NeighborIndex::build(&pts);
        let c = [0.1, 0.4];
        let expect: Vec<usize> = (0..pts.len())
            .filter(|&i| distance_sq(&c, pts.point(i)) <= 0.09)
            .collect();
        assert_eq!(index.within(&c, 0.3, true), expect);
    }
}
