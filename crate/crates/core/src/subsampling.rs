//! Constructive transfer of continuous L2 bounds to discrete point sets:
//! greedy patch covers, thinned greedy prefixes, cluster slicing, and
//! nested sequences built from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    fill_distance, geometric_constants, Domain, DomainKind, GeometryConstants, GreedyRun, NeighborIndex, PointSet,
};
use crate::interpolation::{fit, Interpolant};
use crate::io::{csv_table, fmt_f64};
use crate::kernels::RadialKernel;
use crate::quadrature::{composite_on_breaks, domain_rule, graded_breaks};

/// Candidate grids larger than this are refused.
pub const MAX_GRID_POINTS: usize = 1 << 24;

/// Largest center count for which a nested level is interpolated.
pub const MAX_FIT_POINTS: usize = 8193;

/// Candidate-grid cells per unit of the scale `q` in a subsampling run.
pub fn grid_per_q(dim: usize) -> f64 {
    match dim {
        1 => 20.0,
        2 => 8.0,
        _ => 4.0,
    }
}

/// Voronoi patches of the first `N` greedy points, measured on the grid.
#[derive(Debug, Clone)]
pub struct PatchCover {
    base: PointSet,
    assignment: Vec<u32>,
    measures: Vec<f64>,
    counts: Vec<usize>,
    cell_volume: f64,
}

/// Patch measures against `2^-d c^d C_{d,a} / N <= mu <= 2^d C_d C^d / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchBounds {
    pub lower: f64,
    pub upper: f64,
    pub min_measure: f64,
    pub max_measure: f64,
    pub holds: bool,
}

impl PatchCover {
    pub fn base(&self) -> &PointSet {
        &self.base
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Patch index of every candidate-grid point.
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Checks the patch measure sandwich, allowing twice the measure of the
    /// grid cells along a patch boundary as slack.
    pub fn bounds(&self, domain: &Domain) -> PatchBounds {
        let k = geometric_constants(domain);
        let d = domain.dim() as i32;
        let n = self.base.len() as f64;
        let lower = 2f64.powi(-d) * k.c_omega.powi(d) * k.c_d_alpha / n;
        let upper = 2f64.powi(d) * k.c_d * k.cap_c_omega.powi(d) / n;
        let mut holds = true;
        for (&mu, &count) in self.measures.iter().zip(&self.counts) {
            let boundary = (count as f64).powf((d as f64 - 1.0) / d as f64).ceil() * 2f64.powi(d);
            let slack = 2.0 * boundary * self.cell_volume;
            holds &= mu + slack >= lower && mu - slack <= upper;
        }
        PatchBounds {
            lower,
            upper,
            min_measure: self.measures.iter().copied().fold(f64::INFINITY, f64::min),
            max_measure: self.measures.iter().copied().fold(0.0, f64::max),
            holds,
        }
    }
}

fn cover_from(domain: &Domain, base: PointSet) -> Result<PatchCover> {
    let grid = domain.candidate_grid().points();
    let n = base.len();
    if grid.len() < 8 * n {
        return Err(Error::Resolution(format!(
            "{} grid points for {n} patches; at least 8 per patch are needed",
            grid.len()
        )));
    }
    let index = NeighborIndex::build(&base);
    let assignment: Vec<u32> = grid
        .iter()
        .map(|p| index.nearest(p).map_or(0, |(i, _)| i as u32))
        .collect();
    let mut counts = vec![0usize; n];
    for &a in &assignment {
        counts[a as usize] += 1;
    }
    let cell_volume = domain.volume() / grid.len() as f64;
    Ok(PatchCover {
        base,
        measures: counts.iter().map(|&c| c as f64 * cell_volume).collect(),
        counts,
        assignment,
        cell_volume,
    })
}

/// Patches `E_j` of the first `n` greedy points (default seed). Measures
/// are grid-cell counts times `vol / |grid|`, so they sum to the volume.
pub fn build_patch_cover(domain: &Domain, n: usize) -> Result<PatchCover> {
    build_patch_cover_from(domain, n, None)
}

pub fn build_patch_cover_from(domain: &Domain, n: usize, seed: Option<&[f64]>) -> Result<PatchCover> {
    if n == 0 {
        return Err(Error::usage("a patch cover needs at least one point"));
    }
    let mut run = GreedyRun::new(domain, seed)?;
    run.extend_to(n)?;
    cover_from(domain, run.points())
}

/// `sum_j |g(y_j)| mu(E_j)`.
pub fn riemann_quadrature(cover: &PatchCover, g: impl Fn(&[f64]) -> f64) -> f64 {
    cover
        .base
        .iter()
        .zip(&cover.measures)
        .map(|(p, mu)| g(p).abs() * mu)
        .sum()
}

fn check_grid(domain: &Domain, q: f64) -> Result<()> {
    let delta = domain.candidate_grid().resolution();
    if q < 4.0 * delta {
        return Err(Error::Resolution(format!(
            "scale q = {q:e} is below four grid spacings ({delta:e})"
        )));
    }
    Ok(())
}

/// Number of greedy points in the thinned prefix: the first prefix whose
/// fill distance drops below `q`.
fn thin_len(run: &mut GreedyRun<'_>, q: f64) -> Result<usize> {
    run.extend_until_fill_below(q)?;
    Ok(run.stats().iter().position(|s| s.h < q).map_or(run.len(), |i| i + 1))
}

/// Shortest greedy prefix `Y'` with `h_{Y'} < q`; it satisfies
/// `q/2 <= q_{Y'} <= h_{Y'} < 2q`.
pub fn thin_prefix(domain: &Domain, q: f64, seed: Option<&[f64]>) -> Result<PointSet> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::usage(format!("scale q must be positive, got {q}")));
    }
    if q < domain.diameter() {
        check_grid(domain, q)?;
    }
    let mut run = GreedyRun::new(domain, seed)?;
    let n = thin_len(&mut run, q)?;
    Ok(run.prefix(n))
}

/// Drops every point of `yp` lying in an open ball of radius `q/2` around
/// a point of `y0`.
pub fn exclude_near(yp: &PointSet, y0: &PointSet, q: f64) -> Result<PointSet> {
    let keep = excluded_indices(yp, y0, q)?;
    if keep.is_empty() {
        return Err(Error::Degenerate(format!(
            "every point lies within q/2 = {:e} of the reference set; q is too large relative to q_Y0",
            q / 2.0
        )));
    }
    Ok(yp.subset(&keep))
}

fn excluded_indices(yp: &PointSet, y0: &PointSet, q: f64) -> Result<Vec<usize>> {
    if y0.is_empty() {
        return Ok((0..yp.len()).collect());
    }
    if yp.dim() != y0.dim() {
        return Err(Error::DimensionMismatch {
            expected: yp.dim(),
            got: y0.dim(),
        });
    }
    let index = NeighborIndex::build(y0);
    Ok((0..yp.len())
        .filter(|&i| index.nearest(yp.point(i)).is_none_or(|(_, d)| d >= 0.5 * q))
        .collect())
}

/// Largest admissible scale `min(2^{-1/d} c / (2 C) q_Y0, 2 r / 5)`.
pub fn max_subsample_scale(domain: &Domain, y0: &PointSet) -> f64 {
    let k = geometric_constants(domain);
    let d = domain.dim() as f64;
    let by_cone = 0.4 * domain.cone_radius();
    match y0.separation_distance() {
        Ok(q0) => (2f64.powf(-1.0 / d) * k.c_omega / (2.0 * k.cap_c_omega) * q0).min(by_cone),
        Err(_) => by_cone,
    }
}

/// Contraction factor `a = (3/22) 2^{-1/d} c / (2 C)` of nested sequences.
pub fn nested_ratio(domain: &Domain) -> f64 {
    let k = geometric_constants(domain);
    3.0 / 22.0 * 2f64.powf(-1.0 / domain.dim() as f64) * k.c_omega / (2.0 * k.cap_c_omega)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubsampleOptions {
    /// Size `N` of the base greedy set; by default the smallest power of
    /// two covering the thinned prefix with `q_{Y_N} <= 2q/3`.
    pub n_base: Option<usize>,
    /// Precomputed `|g|_{L2(Omega)}`; otherwise a composite rule is used.
    pub l2_omega: Option<f64>,
    pub seed: Option<Vec<f64>>,
    /// Compare the patch Riemann sum of `g^2` with twice its integral.
    pub verify_riemann: bool,
}

/// Bookkeeping of the cluster construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCertificate {
    /// Selected slice, zero based.
    pub ell_star: usize,
    /// Common cluster size after truncation.
    pub m: usize,
    pub clusters: usize,
    pub slice_min: f64,
    pub slice_mean: f64,
    pub size_min: usize,
    pub size_max: usize,
    /// `C_{d,a} q^d N / (6^d C_d C^d)`.
    pub size_lower_bound: f64,
    /// `2^d c^d q^d N` as printed.
    pub size_upper_bound_literal: f64,
    /// `2^d c^{-d} q^d N`, the value the volume argument yields.
    pub size_upper_bound_corrected: f64,
    pub sizes_within_bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannCheck {
    pub patch_sum: f64,
    pub integral: f64,
    pub within_factor_two: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleResult {
    #[serde(skip)]
    pub y1: PointSet,
    pub q: f64,
    pub q_y1: Option<f64>,
    pub h_y1: f64,
    pub sandwich_ok: bool,
    pub union_separation: Option<f64>,
    pub union_ok: bool,
    pub discrete_norm: f64,
    pub continuous_norm: f64,
    pub norm_ratio: f64,
    pub bound_sqrt_c: f64,
    pub ratio_ok: bool,
    pub n_base: usize,
    pub n_prime: usize,
    pub n_double_prime: usize,
    pub grid_spacing: f64,
    pub certificate: ClusterCertificate,
    pub riemann: Option<RiemannCheck>,
    pub warnings: Vec<String>,
}

impl SubsampleResult {
    pub fn all_ok(&self) -> bool {
        self.sandwich_ok && self.union_ok && self.ratio_ok
    }
}

/// Values of `g` on a whole point set.
pub type BatchFn<'a> = dyn Fn(&PointSet) -> Result<Vec<f64>> + 'a;

fn default_l2(domain: &Domain, g: &BatchFn<'_>, q: f64) -> Result<f64> {
    let rule = match domain.kind() {
        DomainKind::Interval { a, b } => {
            let panels = ((4.0 * (b - a) / q).ceil() as usize).clamp(512, 1 << 16);
            let breaks: Vec<f64> = (0..=panels)
                .map(|i| {
                    if i == panels {
                        *b
                    } else {
                        a + (b - a) * i as f64 / panels as f64
                    }
                })
                .collect();
            composite_on_breaks(&graded_breaks(&breaks, 20), 8)?
        }
        _ => domain_rule(domain, ((2.0 / q).ceil() as usize).clamp(16, 64), 8)?,
    };
    let values: Vec<f64> = g(rule.nodes())?.iter().map(|v| v * v).collect();
    Ok(rule.integrate_values(&values).sqrt())
}

fn refined(domain: &Domain, q: f64) -> Result<Domain> {
    let spacing = domain.grid_spacing().min(q / grid_per_q(domain.dim()));
    let estimate = domain.volume() / spacing.powi(domain.dim() as i32);
    if estimate > MAX_GRID_POINTS as f64 {
        return Err(Error::Resolution(format!(
            "scale q = {q:e} needs about {estimate:.0} grid points (limit {MAX_GRID_POINTS})"
        )));
    }
    domain.clone().with_grid_spacing(spacing)
}

/// Finds `Y_1` with `q/3 <= q_{Y1} <= h_{Y1} <= 22q/3`, `q_{Y0 u Y1} >= q/6`
/// and `|g|_{L2(Y1)} <= sqrt(C~) |g|_{L2(Omega)}`.
pub fn subsample(
    domain: &Domain,
    g: impl Fn(&[f64]) -> f64,
    y0: &PointSet,
    q: f64,
    n_base: Option<usize>,
) -> Result<SubsampleResult> {
    let opts = SubsampleOptions {
        n_base,
        ..SubsampleOptions::default()
    };
    subsample_with(domain, g, y0, q, &opts)
}

pub fn subsample_with(
    domain: &Domain,
    g: impl Fn(&[f64]) -> f64,
    y0: &PointSet,
    q: f64,
    opts: &SubsampleOptions,
) -> Result<SubsampleResult> {
    subsample_batch(domain, &|ps: &PointSet| Ok(ps.iter().map(&g).collect()), y0, q, opts)
}

/// `subsample_with` for a batch-evaluated `g`.
pub fn subsample_batch(
    domain: &Domain,
    g: &BatchFn<'_>,
    y0: &PointSet,
    q: f64,
    opts: &SubsampleOptions,
) -> Result<SubsampleResult> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::usage(format!("scale q must be positive, got {q}")));
    }
    if !y0.is_empty() && y0.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: y0.dim(),
        });
    }
    let k = geometric_constants(domain);
    let d = domain.dim() as f64;
    let sep_factor = 2f64.powf(-1.0 / d) * k.c_omega / (2.0 * k.cap_c_omega);
    if let Ok(q0) = y0.separation_distance() {
        if q > sep_factor * q0 * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "q = {q:e} exceeds 2^(-1/d) c_Omega / (2 C_Omega) * q_Y0 = {:e}",
                sep_factor * q0
            )));
        }
    }
    if q > 0.4 * domain.cone_radius() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "q = {q:e} exceeds 2r/5 = {:e}",
            0.4 * domain.cone_radius()
        )));
    }
    let fine = refined(domain, q)?;
    check_grid(&fine, q)?;
    let mut warnings = Vec::new();

    let mut run = GreedyRun::new(&fine, opts.seed.as_deref())?;
    let n_prime = thin_len(&mut run, q)?;
    let y_prime = run.prefix(n_prime);

    let n_base = match opts.n_base {
        Some(n) => {
            run.extend_to(n)?;
            let q_n = run.stats()[n - 1].q.unwrap_or(f64::INFINITY);
            if n < n_prime || q_n > 2.0 * q / 3.0 {
                return Err(Error::Precondition(format!(
                    "base set of {n} points has q_YN = {q_n:e} > 2q/3 = {:e} or does not contain the thinned prefix ({n_prime} points)",
                    2.0 * q / 3.0
                )));
            }
            n
        }
        None => {
            let mut n = n_prime.next_power_of_two().max(2);
            loop {
                run.extend_to(n)?;
                if run.stats()[n - 1].q.is_some_and(|qn| qn <= 2.0 * q / 3.0) {
                    break n;
                }
                n *= 2;
            }
        }
    };
    let y_n = run.prefix(n_base);

    let keep = excluded_indices(&y_prime, y0, q)?;
    if keep.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {n_prime} thinned points lie within q/2 of the reference set"
        )));
    }
    let centers = y_prime.subset(&keep);
    if keep.len() + y0.len() < n_prime {
        warnings.push("exclusion removed more points than |Y0|".into());
    }

    // clusters in greedy discovery order
    let index = NeighborIndex::build(&y_n);
    let clusters: Vec<Vec<usize>> = centers.iter().map(|c| index.within(c, q / 3.0, true)).collect();
    let size_min = clusters.iter().map(Vec::len).min().unwrap_or(0);
    let size_max = clusters.iter().map(Vec::len).max().unwrap_or(0);
    let m = size_min;
    if m == 0 {
        return Err(Error::Degenerate("empty cluster".into()));
    }
    let flat: Vec<usize> = clusters.iter().flat_map(|c| c[..m].iter().copied()).collect();
    let g2: Vec<f64> = g(&y_n.subset(&flat))?.iter().map(|v| v * v).collect();
    let slices: Vec<f64> = (0..m)
        .map(|l| g2.iter().skip(l).step_by(m).sum::<f64>() / clusters.len() as f64)
        .collect();
    let (ell_star, slice_min) =
        slices.iter().copied().enumerate().fold(
            (0, f64::INFINITY),
            |best, (l, v)| if v < best.1 { (l, v) } else { best },
        );
    let slice_mean = slices.iter().sum::<f64>() / m as f64;
    let picks: Vec<usize> = clusters.iter().map(|c| c[ell_star]).collect();
    let y1 = y_n.subset(&picks);
    let picked_sq: f64 = g2.iter().skip(ell_star).step_by(m).sum();

    let di = domain.dim() as i32;
    let nf = n_base as f64;
    let size_lower_bound = k.c_d_alpha * q.powi(di) * nf / (6f64.powi(di) * k.c_d * k.cap_c_omega.powi(di));
    let size_upper_bound_literal = 2f64.powi(di) * k.c_omega.powi(di) * q.powi(di) * nf;
    let size_upper_bound_corrected = 2f64.powi(di) * k.c_omega.powi(-di) * q.powi(di) * nf;
    let sizes_within_bounds = size_min as f64 >= size_lower_bound && size_max as f64 <= size_upper_bound_corrected;
    if size_max as f64 > size_upper_bound_literal {
        warnings.push(format!(
            "largest cluster ({size_max}) exceeds the printed upper bound {size_upper_bound_literal:.3}"
        ));
    }

    let q_y1 = y1.separation_distance().ok();
    let h_y1 = fill_distance(&y1, &fine)?;
    let sandwich_ok = q_y1.is_none_or(|s| s >= q / 3.0) && h_y1 <= 22.0 * q / 3.0;
    let union = if y0.is_empty() { y1.clone() } else { y0.concat(&y1)? };
    let union_separation = union.separation_distance().ok();
    let union_ok = union_separation.is_none_or(|s| s >= q / 6.0);

    let continuous_norm = match opts.l2_omega {
        Some(v) => v,
        None => default_l2(domain, g, q)?,
    };
    let discrete_norm = (picked_sq / y1.len() as f64).sqrt();
    let bound_sqrt_c = k.c_tilde.sqrt();
    let norm_ratio = if continuous_norm > 0.0 {
        discrete_norm / continuous_norm
    } else {
        0.0
    };
    let ratio_ok = discrete_norm <= bound_sqrt_c * continuous_norm * (1.0 + 1e-12) + 1e-300;

    let riemann = if opts.verify_riemann {
        let cover = cover_from(&fine, y_n.clone())?;
        let values = g(&y_n)?;
        let patch_sum: f64 = values.iter().zip(cover.measures()).map(|(v, mu)| v * v * mu).sum();
        let integral = continuous_norm * continuous_norm;
        Some(RiemannCheck {
            patch_sum,
            integral,
            within_factor_two: patch_sum <= 2.0 * integral,
        })
    } else {
        None
    };

    Ok(SubsampleResult {
        y1,
        q,
        q_y1,
        h_y1,
        sandwich_ok,
        union_separation,
        union_ok,
        discrete_norm,
        continuous_norm,
        norm_ratio,
        bound_sqrt_c,
        ratio_ok,
        n_base,
        n_prime,
        n_double_prime: centers.len(),
        grid_spacing: fine.grid_spacing(),
        certificate: ClusterCertificate {
            ell_star,
            m,
            clusters: clusters.len(),
            slice_min,
            slice_mean,
            size_min,
            size_max,
            size_lower_bound,
            size_upper_bound_literal,
            size_upper_bound_corrected,
            sizes_within_bounds,
        },
        riemann,
        warnings,
    })
}

/// One transition `X_m -> X_{m+1}` of a nested sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub m: usize,
    /// `|X_{m+1}|`.
    pub n_points: usize,
    pub q: f64,
    pub h: f64,
    /// `|f - s_{f,X_m}|_{L2(X_{m+1})}`.
    pub disc_err: f64,
    /// `|f - s_{f,X_m}|_{L2(Omega)}`.
    pub cont_err: f64,
    pub ratio: f64,
    pub bound_sqrt_c: f64,
    pub sandwich_ok: bool,
    pub ratio_ok: bool,
}

#[derive(Debug, Clone)]
pub struct NestedSequence {
    pub sets: Vec<PointSet>,
    pub levels: Vec<LevelReport>,
    pub constants: GeometryConstants,
    pub a: f64,
    pub warnings: Vec<String>,
}

fn l2_error(domain: &Domain, s: &Interpolant, f: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    crate::rates::interpolant_l2_error(s, domain, f, &crate::rates::L2Scheme::default())
}

/// Shortest greedy prefix `X_0` with `h < h0` whose subsampling scale
/// stays below `2r/5`.
pub fn initial_set(domain: &Domain, h0: f64) -> Result<PointSet> {
    if !(h0 > 0.0) {
        return Err(Error::usage(format!("h0 must be positive, got {h0}")));
    }
    let k = geometric_constants(domain);
    let sep_factor = 2f64.powf(-1.0 / domain.dim() as f64) * k.c_omega / (2.0 * k.cap_c_omega);
    let base = domain
        .clone()
        .with_grid_spacing(domain.grid_spacing().min(h0 / grid_per_q(domain.dim())))?;
    let mut run = GreedyRun::new(&base, None)?;
    let mut m0 = 1;
    loop {
        run.extend_to(m0)?;
        let s = run.stats()[m0 - 1];
        if s.h < h0 && s.q.is_some_and(|q| sep_factor * q < 0.4 * domain.cone_radius()) {
            return Ok(run.prefix(m0));
        }
        m0 += 1;
    }
}

/// Builds `X_0 c X_1 c ...` by repeated subsampling of `g = f - s_{f,X_m}`
/// at scales `q = a^{m+1} q_{X_0}`. Levels that would exceed the grid or
/// dense-solve limits end the sequence with a warning.
pub fn build_nested_sequence(
    domain: &Domain,
    kernel: &RadialKernel,
    f: impl Fn(&[f64]) -> f64,
    m_max: usize,
    h0: f64,
) -> Result<NestedSequence> {
    if m_max == 0 {
        return Err(Error::usage("m_max must be at least 1"));
    }
    if !(h0 > 0.0) {
        return Err(Error::usage(format!("h0 must be positive, got {h0}")));
    }
    let k = geometric_constants(domain);
    let a = nested_ratio(domain);
    let x0 = initial_set(domain, h0)?;
    let q0 = x0.separation_distance()?;

    let mut sets = vec![x0];
    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    let sqrt_c = k.c_tilde.sqrt();
    for m in 0..m_max {
        let x = sets[m].clone();
        if x.len() > MAX_FIT_POINTS {
            warnings.push(format!(
                "stopped before level {m}: |X_{m}| = {} exceeds the dense solve limit {MAX_FIT_POINTS}",
                x.len()
            ));
            break;
        }
        let values: Vec<f64> = x.iter().map(&f).collect();
        let s = fit(kernel, &x, &values)?;
        let g = |ps: &PointSet| -> Result<Vec<f64>> {
            let sv = s.evaluate(ps)?;
            Ok(ps.iter().zip(sv).map(|(p, v)| f(p) - v).collect())
        };
        let cont_err = l2_error(domain, &s, &f)?;
        let q = a.powi(m as i32 + 1) * q0;
        let opts = SubsampleOptions {
            l2_omega: Some(cont_err),
            ..SubsampleOptions::default()
        };
        let result = match subsample_batch(domain, &g, &x, q, &opts) {
            Ok(r) => r,
            Err(Error::Resolution(msg)) => {
                warnings.push(format!("stopped at level {m}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let next = x.concat(&result.y1)?;
        let errs = s.evaluate(&next)?;
        let disc_sq: f64 = next.iter().zip(&errs).map(|(p, v)| (f(p) - v).powi(2)).sum();
        let disc_err = (disc_sq / next.len() as f64).sqrt();
        let fine = refined(domain, q)?;
        let h = fill_distance(&next, &fine)?;
        let q_next = next.separation_distance()?;
        let scale = a.powi(m as i32 + 1) * q0;
        let ratio = if cont_err > 0.0 { disc_err / cont_err } else { 0.0 };
        levels.push(LevelReport {
            m,
            n_points: next.len(),
            q: q_next,
            h,
            disc_err,
            cont_err,
            ratio,
            bound_sqrt_c: sqrt_c,
            sandwich_ok: q_next >= scale / 6.0 && h <= 22.0 * scale / 3.0,
            ratio_ok: disc_err <= sqrt_c * cont_err * (1.0 + 1e-12),
        });
        warnings.extend(result.warnings);
        sets.push(next);
    }
    Ok(NestedSequence {
        sets,
        levels,
        constants: k,
        a,
        warnings,
    })
}

/// Columns `m, n_points, q, h, disc_err, cont_err, ratio, bound_sqrtC`.
pub fn sequence_csv(levels: &[LevelReport]) -> String {
    csv_table(
        &[
            "m",
            "n_points",
            "q",
            "h",
            "disc_err",
            "cont_err",
            "ratio",
            "bound_sqrtC",
        ],
        levels.iter().map(|l| {
            vec![
                l.m.to_string(),
                l.n_points.to_string(),
                fmt_f64(l.q),
                fmt_f64(l.h),
                fmt_f64(l.disc_err),
                fmt_f64(l.cont_err),
                fmt_f64(l.ratio),
                fmt_f64(l.bound_sqrt_c),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_patches_split_the_interval() {
        let omega = Domain::unit_interval();
        let cover = build_patch_cover_from(&omega, 2, Some(&[0.0])).unwrap();
        assert_eq!(cover.base().coords(), &[0.0, 1.0]);
        let delta = omega.candidate_grid().resolution();
        for mu in cover.measures() {
            assert!((mu - 0.5).abs() <= delta);
        }
        let single = build_patch_cover(&omega, 1).unwrap();
        assert!((single.measures()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riemann_sums() {
        let omega = Domain::unit_interval();
        let cover = build_patch_cover(&omega, 64).unwrap();
        assert!((riemann_quadrature(&cover, |_| 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(riemann_quadrature(&cover, |_| 0.0), 0.0);
        let e64 = (riemann_quadrature(&cover, |p| p[0]) - 0.5).abs();
        let fine = build_patch_cover(&omega, 256).unwrap();
        let e256 = (riemann_quadrature(&fine, |p| p[0]) - 0.5).abs();
        assert!(e64 < 0.02 && e256 <= e64);
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let omega = Domain::unit_interval().with_grid_spacing(0.01).unwrap();
        assert!(matches!(build_patch_cover(&omega, 50), Err(Error::Resolution(_))));
        assert!(matches!(thin_prefix(&omega, 0.02, None), Err(Error::Resolution(_))));
    }

    #[test]
    fn thin_prefix_examples() {
        let omega = Domain::unit_interval();
        let y = thin_prefix(&omega, 0.6, Some(&[0.0])).unwrap();
        assert_eq!(y.coords(), &[0.0, 1.0]);
        let y = thin_prefix(&omega, 2.0, Some(&[0.0])).unwrap();
        assert_eq!(y.len(), 1);
    }

    #[test]
    fn exclusion() {
        let yp = PointSet::equidistant(0.0, 1.0, 11);
        assert_eq!(exclude_near(&yp, &PointSet::empty(1), 0.1).unwrap(), yp);
        assert!(matches!(exclude_near(&yp, &yp, 0.1), Err(Error::Degenerate(_))));
        let y0 = PointSet::from_1d(&[0.52]);
        assert_eq!(exclude_near(&yp, &y0, 0.1).unwrap().len(), 10);
    }

    #[test]
    fn interval_ratio_constant() {
        assert!((nested_ratio(&Domain::unit_interval()) * 704.0 / 3.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_functions() {
        let omega = Domain::unit_interval();
        let y0 = PointSet::empty(1);
        let zero = subsample(&omega, |_| 0.0, &y0, 0.05, None).unwrap();
        assert_eq!(zero.norm_ratio, 0.0);
        assert!(zero.all_ok());
        let one = subsample(&omega, |_| 1.0, &y0, 0.05, None).unwrap();
        assert!((one.discrete_norm - 1.0).abs() < 1e-15);
        assert!((one.norm_ratio - 1.0).abs() < 1e-9);
        assert!(one.all_ok());
        assert!(one.certificate.slice_min <= one.certificate.slice_mean);
    }

    #[test]
    fn precondition_names_the_bound() {
        let omega = Domain::unit_interval();
        let y0 = PointSet::equidistant(0.0, 1.0, 5);
        match subsample(&omega, |_| 1.0, &y0, 0.01, None) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("q_Y0")),
            other => panic!("{other:?}"),
        }
        match subsample(&omega, |_| 1.0, &PointSet::empty(1), 0.2, None) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("2r/5")),
            other => panic!("{other:?}"),
        }
    }
}
