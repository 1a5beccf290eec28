use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;

use super::domain::Domain;
use super::pointset::PointSet;
use crate::error::Result;

/// Explicit constants attached to a domain and its cone angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryConstants {
    /// Volume of the unit ball.
    pub c_d: f64,
    /// Volume of the unit-radius cone with half-angle alpha.
    pub c_d_alpha: f64,
    pub c_omega: f64,
    pub cap_c_omega: f64,
    /// `4 * 16^d C_d C_Omega^d / (c_Omega^{2d} C_{d,alpha}^2)`.
    pub c_tilde: f64,
}

pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)
}

/// Volume of `{x : |x| <= 1, angle(x, e) <= alpha}`.
pub fn unit_cone_volume(d: usize, alpha: f64) -> f64 {
    if d == 1 {
        return 1.0;
    }
    let s = alpha.sin();
    0.5 * unit_ball_volume(d) * beta_reg((d as f64 - 1.0) / 2.0, 0.5, s * s)
}

pub fn geometric_constants(domain: &Domain) -> GeometryConstants {
    let d = domain.dim();
    let df = d as f64;
    let c_d = unit_ball_volume(d);
    let c_d_alpha = unit_cone_volume(d, domain.cone_angle());
    let c_omega = domain.c_omega();
    let cap_c_omega = (2.0 * PI / domain.cone_angle()).powf(1.0 / df) * c_omega;
    let c_tilde = 4.0 * 16f64.powi(d as i32) * c_d * cap_c_omega.powi(d as i32)
        / (c_omega.powi(2 * d as i32) * c_d_alpha * c_d_alpha);
    GeometryConstants {
        c_d,
        c_d_alpha,
        c_omega,
        cap_c_omega,
        c_tilde,
    }
}

/// Outcome of comparing `h_X` and `q_X` with their `n^{-1/d}` bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub h: f64,
    pub q: f64,
    pub h_lower: f64,
    pub q_upper: f64,
    pub h_ok: bool,
    pub q_ok: bool,
}

/// `h_X >= c_Omega n^{-1/d}` (with grid slack) and `q_X <= C_Omega n^{-1/d}`.
pub fn check_geometric_bounds(points: &PointSet, domain: &Domain) -> Result<BoundsReport> {
    let q = points.separation_distance()?;
    let h = points.fill_distance(domain)?;
    let n = points.len();
    let k = geometric_constants(domain);
    let scale = (n as f64).powf(-1.0 / domain.dim() as f64);
    let h_lower = k.c_omega * scale;
    let q_upper = k.cap_c_omega * scale;
    let slack = domain.candidate_grid().resolution();
    Ok(BoundsReport {
        n,
        h,
        q,
        h_lower,
        q_upper,
        h_ok: h + slack >= h_lower,
        q_ok: q <= q_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_constants() {
        let k = geometric_constants(&Domain::unit_interval());
        assert!((k.c_omega - 0.5).abs() < 1e-15);
        assert!((k.cap_c_omega - 4.0).abs() < 1e-14);
        assert!((k.c_d - 2.0).abs() < 1e-14);
        assert_eq!(k.c_d_alpha, 1.0);
        assert!((k.c_tilde - 2048.0).abs() < 1e-9);
    }

    #[test]
    fn unit_disk_constants() {
        let k = geometric_constants(&Domain::unit_disk());
        assert!((k.c_omega - 1.0).abs() < 1e-14);
        assert!((k.cap_c_omega - 8f64.sqrt()).abs() < 1e-14);
        // a planar cone of half-angle alpha is a sector of area alpha
        assert!((k.c_d_alpha - PI / 4.0).abs() < 1e-13);
        assert!((k.c_tilde - 131072.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn cone_in_3d_against_cap_formula() {
        // solid cone of half-angle a in the unit ball: 2 pi (1 - cos a) / 3
        let a = 0.7;
        let exact = 2.0 * PI * (1.0 - f64::cos(a)) / 3.0;
        assert!((unit_cone_volume(3, a) - exact).abs() < 1e-12);
    }

    #[test]
    fn equidistant_bounds() {
        let r = check_geometric_bounds(&PointSet::equidistant(0.0, 1.0, 33), &Domain::unit_interval()).unwrap();
        assert!(r.h_ok && r.q_ok);
        assert!((r.q_upper - 4.0 / 33.0).abs() < 1e-15);
        assert!((r.h_lower - 0.5 / 33.0).abs() < 1e-15);
    }
}
