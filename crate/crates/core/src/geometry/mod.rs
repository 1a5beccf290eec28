//! Domains, point sets, fill and separation distances, geometric greedy
//! selection and the explicit geometric constants.

mod constants;
mod domain;
mod greedy;
mod index;
mod pointset;

use rayon::prelude::*;

pub use constants::{
    check_geometric_bounds, geometric_constants, unit_ball_volume, unit_cone_volume, BoundsReport, GeometryConstants,
};
pub use domain::{CandidateGrid, Domain, DomainKind};
pub use greedy::{geometric_greedy, GreedyRun, GreedyStats};
pub(crate) use index::NeighborIndex;
pub use pointset::{distance, PointSet};

use crate::error::{Error, Result};

/// Fill distance of `points` in `domain`: the largest distance from a
/// candidate-grid point to its nearest element of `points`.
///
/// This is a lower bound on the true value, off by at most the grid
/// resolution.
pub fn fill_distance(points: &PointSet, domain: &Domain) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::usage("fill distance of an empty point set"));
    }
    if points.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: points.dim(),
        });
    }
    let grid = domain.candidate_grid().points();
    let index = NeighborIndex::build(points);
    let coords = grid.coords();
    let d = grid.dim();
    let h = coords
        .par_chunks(d * 1024)
        .map(|chunk| {
            chunk
                .chunks_exact(d)
                .map(|p| index.nearest(p).map_or(0.0, |(_, r)| r))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_distance_examples() {
        let omega = Domain::unit_interval();
        let delta = omega.candidate_grid().resolution();
        for (xs, h) in [(vec![0.5], 0.5), (vec![0.0, 1.0], 0.5)] {
            let got = fill_distance(&PointSet::from_1d(&xs), &omega).unwrap();
            assert!((got - h).abs() <= delta);
        }
        let x = PointSet::equidistant(0.0, 1.0, 33);
        assert!((x.fill_distance(&omega).unwrap() - 1.0 / 64.0).abs() <= delta);
        assert!(fill_distance(&PointSet::empty(1), &omega).is_err());
    }

    #[test]
    fn fill_distance_on_disk_from_center() {
        let omega = Domain::unit_disk().with_grid_spacing(0.01).unwrap();
        let h = fill_distance(&PointSet::from_points(&[vec![0.0, 0.0]]).unwrap(), &omega).unwrap();
        assert!(h <= 1.0 && h > 0.99);
    }
}
