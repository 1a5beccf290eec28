//! Convergence studies, algebraic rate fits and the smoothness diagnostics
//! built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind, GreedyRun, PointSet};
use crate::interpolation::{evaluate_many, fit, Interpolant, KernelSystem};
use crate::io::{csv_table, fmt_f64};
use crate::kernels::{gram_entries, RadialKernel};
use crate::linalg::min_eigenvalue;
use crate::quadrature::{composite_on_breaks, domain_rule, graded_breaks, QuadRule};
use crate::spectral::{power_norm_of_coeffs, SpectralModel};

/// Smoothness parameters of the published `f_omega` experiment.
pub const FIGURE2_OMEGAS: [f64; 6] = [0.01, 0.41, 0.81, 1.51, 2.01, 3.01];

/// Node counts `2^k + 1`, `k = 2..=13`.
pub fn figure2_ns() -> Vec<usize> {
    (2..=13).map(|k| (1usize << k) + 1).collect()
}

/// Published errors as `omega,n,err_l2` rows.
pub const FIGURE2_REFERENCE_CSV: &str = include_str!("../data/figure2_reference.csv");

/// `(omega, n, err)` triples of [`FIGURE2_REFERENCE_CSV`].
pub fn figure2_reference() -> Vec<(f64, usize, f64)> {
    FIGURE2_REFERENCE_CSV
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',');
            let mut next = || it.next().expect("three columns").trim();
            (
                next().parse().expect("omega"),
                next().parse().expect("n"),
                next().parse().expect("error"),
            )
        })
        .collect()
}

/// Dashed reference slope drawn next to each published curve.
pub fn figure2_reference_slope(omega: f64) -> f64 {
    match omega {
        w if w < 0.2 => 0.51,
        w if w < 0.6 => 0.91,
        w if w < 1.0 => 1.31,
        _ => 2.0,
    }
}

/// Equispaced sample count used to measure the published errors.
pub const FIGURE2_GRID: usize = 65537;

/// How `|f - s|_{L2(Omega)}` is measured.
#[derive(Debug, Clone, PartialEq)]
pub enum L2Scheme {
    /// In one dimension: `order`-point Gauss–Legendre panels between
    /// consecutive nodes, with the two outer panels refined geometrically
    /// `levels` times toward the boundary. Other domains use a composite
    /// rule with about `order` panels per node spacing.
    Graded { order: usize, levels: usize },
    /// `sqrt(vol * mean(e^2))` over `points` equispaced samples including
    /// both endpoints (intervals) or over the candidate grid (otherwise).
    UniformGrid { points: usize },
}

impl Default for L2Scheme {
    fn default() -> Self {
        L2Scheme::Graded { order: 16, levels: 40 }
    }
}

fn interval_samples(a: f64, b: f64, points: usize) -> PointSet {
    PointSet::equidistant(a, b, points.max(2))
}

/// Weighted sample of the domain on which errors are measured.
enum Measure {
    Rule(QuadRule),
    Mean { points: PointSet, volume: f64 },
}

impl Measure {
    fn build(domain: &Domain, centers: &PointSet, scheme: &L2Scheme) -> Result<Self> {
        match (scheme, domain.kind()) {
            (L2Scheme::Graded { order, levels }, DomainKind::Interval { a, b }) => {
                let mut breaks = vec![*a];
                let mut xs: Vec<f64> = centers.iter().map(|p| p[0]).filter(|x| a < x && x < b).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                breaks.extend(xs);
                breaks.push(*b);
                Ok(Measure::Rule(composite_on_breaks(
                    &graded_breaks(&breaks, *levels),
                    *order,
                )?))
            }
            (L2Scheme::Graded { order, .. }, _) => {
                let per_axis = (centers.len() as f64).powf(1.0 / domain.dim() as f64).ceil() as usize;
                Ok(Measure::Rule(domain_rule(
                    domain,
                    2 * per_axis.max(2),
                    (*order).min(8),
                )?))
            }
            (L2Scheme::UniformGrid { points }, DomainKind::Interval { a, b }) => Ok(Measure::Mean {
                points: interval_samples(*a, *b, *points),
                volume: b - a,
            }),
            (L2Scheme::UniformGrid { .. }, _) => Ok(Measure::Mean {
                points: domain.candidate_grid().points().clone(),
                volume: domain.volume(),
            }),
        }
    }

    fn points(&self) -> &PointSet {
        match self {
            Measure::Rule(r) => r.nodes(),
            Measure::Mean { points, .. } => points,
        }
    }

    fn l2(&self, err: &[f64]) -> f64 {
        match self {
            Measure::Rule(r) => r.weights().iter().zip(err).map(|(w, e)| w * e * e).sum::<f64>().sqrt(),
            Measure::Mean { volume, .. } => (volume * err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt(),
        }
    }
}

/// `|f - s_{f,X}|_{L2(Omega)}` with the default graded scheme.
pub fn l2_omega_error(
    kernel: &RadialKernel,
    domain: &Domain,
    centers: &PointSet,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    l2_omega_error_with(kernel, domain, centers, f, &L2Scheme::default())
}

pub fn l2_omega_error_with(
    kernel: &RadialKernel,
    domain: &Domain,
    centers: &PointSet,
    f: impl Fn(&[f64]) -> f64,
    scheme: &L2Scheme,
) -> Result<f64> {
    let values: Vec<f64> = centers.iter().map(&f).collect();
    let s = fit(kernel, centers, &values)?;
    interpolant_l2_error(&s, domain, f, scheme)
}

/// `|f - s|_{L2(Omega)}` for an already fitted interpolant.
pub fn interpolant_l2_error(
    s: &Interpolant,
    domain: &Domain,
    f: impl Fn(&[f64]) -> f64,
    scheme: &L2Scheme,
) -> Result<f64> {
    let measure = Measure::build(domain, s.centers(), scheme)?;
    let pts = measure.points();
    let sv = s.evaluate(pts)?;
    let err: Vec<f64> = pts.iter().zip(&sv).map(|(p, v)| f(p) - v).collect();
    Ok(measure.l2(&err))
}

/// How interpolation nodes are generated for a study.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeRule {
    /// Equally spaced points including both endpoints; intervals only.
    Equidistant,
    /// Prefixes of one farthest-point sequence.
    Greedy { seed: Option<Vec<f64>> },
}

/// Measurements for one node set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub h: f64,
    pub q: f64,
    pub err_l2_omega: f64,
    /// Normalized discrete error on the next node set of a nested study.
    pub err_l2_next: Option<f64>,
    pub err_linf: f64,
    /// Set when this node count failed; the numeric fields are then NaN.
    pub failure: Option<String>,
}

impl ConvergenceRecord {
    fn failed(n: usize, h: f64, q: f64, msg: String) -> Self {
        Self {
            n,
            h,
            q,
            err_l2_omega: f64::NAN,
            err_l2_next: None,
            err_linf: f64::NAN,
            failure: Some(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub scheme: L2Scheme,
    /// Equispaced samples for the sup error on intervals; other domains use
    /// the candidate grid.
    pub linf_points: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            scheme: L2Scheme::default(),
            linf_points: 16385,
        }
    }
}

/// Node sets with their fill and separation distances.
fn node_sets(domain: &Domain, ns: &[usize], rule: &NodeRule) -> Result<Vec<(PointSet, f64, f64)>> {
    if ns.is_empty() {
        return Err(Error::usage("a convergence study needs at least one node count"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::usage("node counts must be positive and strictly increasing"));
    }
    match rule {
        NodeRule::Equidistant => {
            let DomainKind::Interval { a, b } = *domain.kind() else {
                return Err(Error::usage("equidistant nodes are only defined on intervals"));
            };
            ns.iter()
                .map(|&n| {
                    let x = PointSet::equidistant(a, b, n);
                    let h_est = if n > 1 {
                        0.5 * (b - a) / (n - 1) as f64
                    } else {
                        0.5 * (b - a)
                    };
                    let fine = domain.clone().with_target_fill(h_est)?;
                    let h = x.fill_distance(&fine)?;
                    let q = if n > 1 { x.separation_distance()? } else { f64::NAN };
                    Ok((x, h, q))
                })
                .collect()
        }
        NodeRule::Greedy { seed } => {
            let mut run = GreedyRun::new(domain, seed.as_deref())?;
            let mut out = Vec::with_capacity(ns.len());
            for &n in ns {
                run.extend_to(n)?;
                let s = run.stats()[n - 1];
                out.push((run.prefix(n), s.h, s.q.unwrap_or(f64::NAN)));
            }
            Ok(out)
        }
    }
}

fn linf_points(domain: &Domain, opts: &StudyOptions) -> PointSet {
    match (domain.kind(), &opts.scheme) {
        (DomainKind::Interval { a, b }, L2Scheme::UniformGrid { points }) => interval_samples(*a, *b, *points),
        (DomainKind::Interval { a, b }, _) => interval_samples(*a, *b, opts.linf_points),
        _ => domain.candidate_grid().points().clone(),
    }
}

/// One study per target function over shared node sets and factorizations.
pub fn run_convergence_study_many<F>(
    kernel: &RadialKernel,
    domain: &Domain,
    functions: &[F],
    ns: &[usize],
    rule: &NodeRule,
    opts: &StudyOptions,
) -> Result<Vec<Vec<ConvergenceRecord>>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sets = node_sets(domain, ns, rule)?;
    let sup_pts = linf_points(domain, opts);
    let sup_truth: Vec<Vec<f64>> = functions.iter().map(|f| sup_pts.iter().map(f).collect()).collect();
    let mut studies: Vec<Vec<ConvergenceRecord>> = vec![Vec::with_capacity(sets.len()); functions.len()];
    let mut fitted: Vec<Option<Vec<Interpolant>>> = Vec::with_capacity(sets.len());
    for (x, h, q) in &sets {
        let n = x.len();
        let outcome = (|| -> Result<Vec<(Interpolant, f64, f64)>> {
            let system = KernelSystem::new(kernel, x)?;
            let values: Vec<Vec<f64>> = functions.iter().map(|f| x.iter().map(f).collect()).collect();
            let interps = system.fit_many(&values)?;
            let sup_vals = evaluate_many(&interps, &sup_pts)?;
            let measure = Measure::build(domain, x, &opts.scheme)?;
            let l2_vals = if measure.points() == &sup_pts {
                sup_vals.clone()
            } else {
                evaluate_many(&interps, measure.points())?
            };
            Ok(interps
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let err: Vec<f64> = measure
                        .points()
                        .iter()
                        .zip(&l2_vals[i])
                        .map(|(p, v)| functions[i](p) - v)
                        .collect();
                    let linf = sup_truth[i]
                        .iter()
                        .zip(&sup_vals[i])
                        .map(|(t, v)| (t - v).abs())
                        .fold(0.0, f64::max);
                    (s, measure.l2(&err), linf)
                })
                .collect())
        })();
        match outcome {
            Ok(rows) => {
                let mut keep = Vec::with_capacity(rows.len());
                for (i, (s, l2, linf)) in rows.into_iter().enumerate() {
                    studies[i].push(ConvergenceRecord {
                        n,
                        h: *h,
                        q: *q,
                        err_l2_omega: l2,
                        err_l2_next: None,
                        err_linf: linf,
                        failure: None,
                    });
                    keep.push(s);
                }
                fitted.push(Some(keep));
            }
            Err(e) => {
                for study in studies.iter_mut() {
                    study.push(ConvergenceRecord::failed(n, *h, *q, e.to_string()));
                }
                fitted.push(None);
            }
        }
    }
    // discrete errors on the following node set, when the sets are nested
    for k in 0..sets.len().saturating_sub(1) {
        let (x, next) = (&sets[k].0, &sets[k + 1].0);
        let Some(interps) = &fitted[k] else { continue };
        if x.positions_in(next).is_err() {
            continue;
        }
        let vals = evaluate_many(interps, next)?;
        for (i, f) in functions.iter().enumerate() {
            let sq: f64 = next.iter().zip(&vals[i]).map(|(p, v)| (f(p) - v).powi(2)).sum();
            studies[i][k].err_l2_next = Some((sq / next.len() as f64).sqrt());
        }
    }
    Ok(studies)
}

pub fn run_convergence_study(
    kernel: &RadialKernel,
    domain: &Domain,
    f: impl Fn(&[f64]) -> f64 + Sync,
    ns: &[usize],
    rule: &NodeRule,
    opts: &StudyOptions,
) -> Result<Vec<ConvergenceRecord>> {
    Ok(run_convergence_study_many(kernel, domain, &[f], ns, rule, opts)?
        .pop()
        .expect("one study"))
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Columns `n, h, q, err_l2_omega, err_l2_next, err_linf`.
pub fn study_csv(records: &[ConvergenceRecord]) -> String {
    csv_table(
        &["n", "h", "q", "err_l2_omega", "err_l2_next", "err_linf"],
        records.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.q),
                fmt_f64(r.err_l2_omega),
                opt_cell(r.err_l2_next),
                fmt_f64(r.err_linf),
            ]
        }),
    )
}

/// Least-squares fit `log err = log c_f + mu log h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub mu: f64,
    pub c_f: f64,
    /// Node counts of the records used.
    pub window: Vec<usize>,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub warnings: Vec<String>,
}

pub const DEFAULT_WINDOW: usize = 4;

/// Fits the last `window_len` records. Records with unusable errors are
/// dropped from the window with a warning; fewer than three usable
/// records is an error.
pub fn fit_rate(records: &[ConvergenceRecord], window_len: usize) -> Result<RateFit> {
    let pairs: Vec<(usize, f64, f64)> = records.iter().map(|r| (r.n, r.h, r.err_l2_omega)).collect();
    fit_rate_pairs(&pairs, window_len)
}

/// Same as [`fit_rate`] on raw `(n, h, err)` triples.
pub fn fit_rate_pairs(data: &[(usize, f64, f64)], window_len: usize) -> Result<RateFit> {
    let start = data.len().saturating_sub(window_len);
    let mut warnings = Vec::new();
    let mut used = Vec::new();
    for &(n, h, e) in &data[start..] {
        if e.is_finite() && e > 0.0 && h.is_finite() && h > 0.0 {
            used.push((n, h.ln(), e.ln()));
        } else {
            warnings.push(format!("record n={n} dropped from the fit window (err={e}, h={h})"));
        }
    }
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "{} usable records in the window, at least 3 are needed",
            used.len()
        )));
    }
    let m = used.len() as f64;
    let mx = used.iter().map(|u| u.1).sum::<f64>() / m;
    let my = used.iter().map(|u| u.2).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|u| (u.1 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|u| (u.1 - mx) * (u.2 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all fill distances in the window coincide".into()));
    }
    let mu = sxy / sxx;
    let intercept = my - mu * mx;
    let residual = (used.iter().map(|u| (u.2 - intercept - mu * u.1).powi(2)).sum::<f64>() / m).sqrt();
    Ok(RateFit {
        mu,
        c_f: intercept.exp(),
        window: used.iter().map(|u| u.0).collect(),
        residual,
        warnings,
    })
}

/// Reading of a fitted rate in power-space units `theta = mu / tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessVerdict {
    pub mu: f64,
    pub theta: f64,
    pub verdict: String,
    /// `theta * tau`, the corresponding Sobolev index.
    pub sobolev_units: f64,
    pub residual: f64,
    pub caveats: Vec<String>,
}

impl SmoothnessVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }

    pub fn is_native(&self) -> bool {
        self.theta > 1.0
    }
}

pub fn smoothness_verdict(fit: &RateFit, kernel: &RadialKernel) -> SmoothnessVerdict {
    let tau = kernel.tau();
    let theta = fit.mu / tau;
    let verdict = if !theta.is_finite() || theta <= 0.0 {
        "inconclusive".to_string()
    } else if theta > 1.0 {
        "in native space (theta > 1)".to_string()
    } else {
        format!("in H_theta' for all theta' < {theta:.4}")
    };
    let mut caveats = vec!["empirical: measured on a single node family".to_string()];
    if fit.residual > 0.1 {
        caveats.push(format!("log-log fit residual {:.3} exceeds 0.1", fit.residual));
    }
    if fit.window.len() < DEFAULT_WINDOW {
        caveats.push(format!("fit window has only {} records", fit.window.len()));
    }
    caveats.extend(fit.warnings.iter().cloned());
    SmoothnessVerdict {
        mu: fit.mu,
        theta,
        verdict,
        sobolev_units: theta * tau,
        residual: fit.residual,
        caveats,
    }
}

/// One step `s_{f,X_{m+1}} - s_{f,X_m}` of the Cauchy diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyLevel {
    pub level: usize,
    pub n_next: usize,
    /// Truncated `H_theta'` norm of the increment.
    pub increment_norm: f64,
    /// The four factors of the bound, before exponents.
    pub l2_omega: f64,
    pub inverse_norm: f64,
    pub discrete_l2: f64,
    /// `(l2^{2-2t} |A^{-1}|^t |X|^t disc^{2t})^{1/2}` with `t = theta'`.
    pub bound: f64,
    pub within_bound: bool,
    /// Increment norm over the previous one.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyDiagnostic {
    pub theta_prime: f64,
    pub levels: Vec<CauchyLevel>,
    pub truncated: Option<String>,
}

/// Default `theta'` for a fitted rate: `0.9 mu / tau`, capped at 1.
pub fn default_theta_prime(fit: &RateFit, kernel: &RadialKernel) -> f64 {
    (0.9 * fit.mu / kernel.tau()).min(1.0)
}

/// Measures `|s_{f,X_{m+1}} - s_{f,X_m}|_{H_theta'}` along nested sets and
/// compares it with the product of the L2, inverse-matrix-norm, size and
/// discrete-L2 factors. All continuous quantities use the model's
/// quadrature rule, which makes the comparison exact up to round-off.
pub fn cauchy_diagnostic(
    kernel: &RadialKernel,
    nested: &[PointSet],
    f: impl Fn(&[f64]) -> f64,
    theta_prime: f64,
    model: &SpectralModel,
) -> Result<CauchyDiagnostic> {
    if !(theta_prime > 0.0 && theta_prime <= 1.0) {
        return Err(Error::usage(format!("theta' must lie in (0, 1], got {theta_prime}")));
    }
    if nested.len() < 2 {
        return Err(Error::usage("the Cauchy diagnostic needs at least two nested sets"));
    }
    let mut positions = Vec::with_capacity(nested.len() - 1);
    for pair in nested.windows(2) {
        positions.push(
            pair[0]
                .positions_in(&pair[1])
                .map_err(|_| Error::usage("point sets are not nested"))?,
        );
    }
    let nodes = model.rule().nodes();
    let weights = model.rule().weights();
    let t = theta_prime;
    let mut levels: Vec<CauchyLevel> = Vec::new();
    let mut truncated = None;
    let mut prev = match fit(kernel, &nested[0], &nested[0].iter().map(&f).collect::<Vec<_>>()) {
        Ok(s) => s,
        Err(e) => {
            return Ok(CauchyDiagnostic {
                theta_prime,
                levels,
                truncated: Some(format!("level 0: {e}")),
            })
        }
    };
    for (m, pos) in positions.iter().enumerate() {
        let x = &nested[m + 1];
        let step = (|| -> Result<(Interpolant, CauchyLevel)> {
            let next = fit(kernel, x, &x.iter().map(&f).collect::<Vec<_>>())?;
            let mut coeffs = next.coeffs().to_vec();
            for (c, &p) in prev.coeffs().iter().zip(pos) {
                coeffs[p] -= c;
            }
            let delta = Interpolant::from_coeffs(kernel, x, coeffs)?;
            let at_nodes = delta.evaluate(nodes)?;
            let proj = model.coefficients_of_values(&at_nodes)?;
            let increment_norm = power_norm_of_coeffs(model, &proj, t)?.value;
            let l2_omega = weights
                .iter()
                .zip(&at_nodes)
                .map(|(w, v)| w * v * v)
                .sum::<f64>()
                .sqrt();
            let at_x = delta.evaluate(x)?;
            let discrete_l2 = (at_x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
            let inverse_norm = 1.0 / min_eigenvalue(&gram_entries(kernel, x))?;
            let bound = (l2_omega.powf(2.0 - 2.0 * t)
                * inverse_norm.powf(t)
                * (x.len() as f64).powf(t)
                * discrete_l2.powf(2.0 * t))
            .sqrt();
            Ok((
                next,
                CauchyLevel {
                    level: m,
                    n_next: x.len(),
                    increment_norm,
                    l2_omega,
                    inverse_norm,
                    discrete_l2,
                    bound,
                    within_bound: increment_norm <= bound * (1.0 + 1e-8) + 1e-14,
                    ratio: None,
                },
            ))
        })();
        match step {
            Ok((next, mut level)) => {
                level.ratio = levels
                    .last()
                    .filter(|l| l.increment_norm > 0.0)
                    .map(|l| level.increment_norm / l.increment_norm);
                levels.push(level);
                prev = next;
            }
            Err(e) => {
                truncated = Some(format!("level {m}: {e}"));
                break;
            }
        }
    }
    Ok(CauchyDiagnostic {
        theta_prime,
        levels,
        truncated,
    })
}

/// The six-function equidistant study on `[0, 1]` with errors measured on
/// [`FIGURE2_GRID`] equispaced samples.
pub fn figure2_study(ns: &[usize]) -> Result<Vec<Vec<ConvergenceRecord>>> {
    let omega = Domain::unit_interval();
    let kernel = RadialKernel::matern_exp();
    let functions: Vec<_> = FIGURE2_OMEGAS
        .iter()
        .map(|&w| move |p: &[f64]| crate::functions::f_omega(w, p[0]))
        .collect();
    let opts = StudyOptions {
        scheme: L2Scheme::UniformGrid { points: FIGURE2_GRID },
        linf_points: FIGURE2_GRID,
    };
    run_convergence_study_many(&kernel, &omega, &functions, ns, &NodeRule::Equidistant, &opts)
}
