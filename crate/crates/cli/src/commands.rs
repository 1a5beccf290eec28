//! Subcommand bodies. Each writes its files into `out` and returns their
//! paths.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rbf_lab::functions::TargetFunction;
use rbf_lab::geometry::{Domain, DomainKind, GreedyRun, PointSet};
use rbf_lab::io::{csv_table, fmt_f64};
use rbf_lab::rates::{
    figure2_reference, figure2_reference_slope, figure2_study, fit_rate, run_convergence_study_many,
    smoothness_verdict, study_csv, RateFit, SmoothnessVerdict, DEFAULT_WINDOW, FIGURE2_OMEGAS,
};
use rbf_lab::spectral::{nystrom_decompose, nystrom_rule};
use rbf_lab::subsampling::{build_nested_sequence, initial_set, sequence_csv, subsample_batch, SubsampleOptions};
use rbf_lab::{Error, Result};

use crate::config::ExperimentConfig;

fn write(out: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn function_tag(f: &TargetFunction, i: usize) -> String {
    match f {
        TargetFunction::Omega(w) => format!("omega_{w}"),
        _ => format!("expr_{i}"),
    }
}

/// Greedy points and per-prefix `(h, q, rho)`.
pub fn cmd_greedy(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let domain = config.domain()?;
    let n = *config
        .nodes
        .counts
        .iter()
        .max()
        .ok_or_else(|| Error::Usage("no node count given".into()))?;
    let start = config.greedy_start(&domain)?;
    let mut run = GreedyRun::new(&domain, start.as_deref())?;
    run.extend_to(n)?;
    let stats = csv_table(
        &["m", "h", "q", "rho"],
        run.stats()
            .iter()
            .map(|s| vec![s.m.to_string(), fmt_f64(s.h), opt(s.q), opt(s.rho)]),
    );
    Ok(vec![
        write(out, "greedy_points.csv", &run.points().to_csv())?,
        write(out, "greedy_stats.csv", &stats)?,
    ])
}

#[derive(Debug, Serialize)]
struct VerdictEntry {
    function: String,
    fit: Option<RateFit>,
    verdict: Option<SmoothnessVerdict>,
    error: Option<String>,
}

/// Convergence study per function and a smoothness verdict for each.
pub fn cmd_rates(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let kernel = config.kernel()?;
    let domain = config.domain()?;
    let functions = config.functions()?;
    if functions.is_empty() {
        return Err(Error::Usage("no target functions configured".into()));
    }
    let rule = config.node_rule(&domain)?;
    let closures: Vec<_> = functions.iter().map(|f| move |p: &[f64]| f.eval(p)).collect();
    let studies = run_convergence_study_many(
        &kernel,
        &domain,
        &closures,
        &config.nodes.counts,
        &rule,
        &config.study_options(),
    )?;
    let mut files = Vec::new();
    let mut verdicts = Vec::new();
    for (i, (f, records)) in functions.iter().zip(&studies).enumerate() {
        files.push(write(
            out,
            &format!("rates_{}.csv", function_tag(f, i)),
            &study_csv(records),
        )?);
        let entry = match fit_rate(records, DEFAULT_WINDOW) {
            Ok(fit) => VerdictEntry {
                function: f.label(),
                verdict: Some(smoothness_verdict(&fit, &kernel)),
                fit: Some(fit),
                error: None,
            },
            Err(e) => VerdictEntry {
                function: f.label(),
                fit: None,
                verdict: None,
                error: Some(e.to_string()),
            },
        };
        verdicts.push(entry);
    }
    files.push(write(out, "verdict.json", &json(&verdicts))?);
    Ok(files)
}

/// The six published studies and a slope summary.
pub fn cmd_reproduce_figure2(out: &Path, max_n: usize) -> Result<Vec<PathBuf>> {
    let ns: Vec<usize> = rbf_lab::rates::figure2_ns()
        .into_iter()
        .filter(|&n| n <= max_n)
        .collect();
    if ns.is_empty() {
        return Err(Error::Usage(format!("no node count is at most {max_n}")));
    }
    let studies = figure2_study(&ns)?;
    let reference = figure2_reference();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (&w, records) in FIGURE2_OMEGAS.iter().zip(&studies) {
        files.push(write(out, &format!("figure2_omega_{w}.csv"), &study_csv(records))?);
        let fitted = fit_rate(records, DEFAULT_WINDOW).map(|f| f.mu).unwrap_or(f64::NAN);
        let table: Vec<(usize, f64, f64)> = reference
            .iter()
            .filter(|r| r.0 == w && r.1 <= max_n)
            .map(|&(_, n, e)| (n, 0.5 / (n - 1) as f64, e))
            .collect();
        let published = rbf_lab::rates::fit_rate_pairs(&table, DEFAULT_WINDOW)
            .map(|f| f.mu)
            .unwrap_or(f64::NAN);
        rows.push(vec![
            w.to_string(),
            fmt_f64(fitted),
            fmt_f64(published),
            fmt_f64(figure2_reference_slope(w)),
        ]);
    }
    let summary = csv_table(&["omega", "fitted_slope", "table_slope", "reference_slope"], rows);
    files.push(write(out, "figure2_slopes.csv", &summary)?);
    Ok(files)
}

#[derive(Debug, Serialize)]
struct SequenceReport<'a> {
    a: f64,
    c_tilde: f64,
    counts: Vec<usize>,
    levels: &'a [rbf_lab::subsampling::LevelReport],
    warnings: &'a [String],
}

/// Nested sequence report, or one subsampling step when `q` is set.
pub fn cmd_subsample(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let kernel = config.kernel()?;
    let domain = config.domain()?;
    let f = config
        .functions()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Usage("no target function configured".into()))?;
    let eval = |p: &[f64]| f.eval(p);
    let sc = &config.subsample;
    if let Some(q) = sc.q {
        let x0 = initial_set(&domain, sc.h0)?;
        let s = rbf_lab::interpolation::fit(&kernel, &x0, &f.values(&x0))?;
        let g = |ps: &PointSet| -> Result<Vec<f64>> {
            let sv = s.evaluate(ps)?;
            Ok(ps.iter().zip(sv).map(|(p, v)| eval(p) - v).collect())
        };
        let opts = SubsampleOptions {
            seed: config.greedy_start(&domain)?,
            ..SubsampleOptions::default()
        };
        let result = subsample_batch(&domain, &g, &x0, q, &opts)?;
        return Ok(vec![
            write(out, "subsample.json", &json(&result))?,
            write(out, "subsample_points.csv", &result.y1.to_csv())?,
        ]);
    }
    let seq = build_nested_sequence(&domain, &kernel, eval, sc.levels, sc.h0)?;
    let report = SequenceReport {
        a: seq.a,
        c_tilde: seq.constants.c_tilde,
        counts: seq.sets.iter().map(PointSet::len).collect(),
        levels: &seq.levels,
        warnings: &seq.warnings,
    };
    Ok(vec![
        write(out, "sequence.csv", &sequence_csv(&seq.levels))?,
        write(out, "sequence.json", &json(&report))?,
    ])
}

/// Uniform random point of the domain.
fn random_point(domain: &Domain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match domain.kind() {
        DomainKind::Interval { a, b } => vec![rng.random_range(*a..=*b)],
        DomainKind::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| rng.random_range(*l..=*u))
            .collect(),
        DomainKind::Disk { center, radius } => loop {
            let x = rng.random_range(-1.0..=1.0);
            let y = rng.random_range(-1.0..=1.0);
            if x * x + y * y <= 1.0 {
                break vec![center[0] + radius * x, center[1] + radius * y];
            }
        },
    }
}

/// Random point pairs, reproducible from `seed`.
pub fn random_pairs(domain: &Domain, count: usize, seed: u64) -> (PointSet, PointSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let mut xs = Vec::with_capacity(count * d);
    let mut ys = Vec::with_capacity(count * d);
    for _ in 0..count {
        xs.extend(random_point(domain, &mut rng));
        ys.extend(random_point(domain, &mut rng));
    }
    (
        PointSet::new(d, xs).expect("finite coordinates"),
        PointSet::new(d, ys).expect("finite coordinates"),
    )
}

/// Mercer truncations checked by `spectral-dump`.
pub const MERCER_RANKS: [usize; 3] = [16, 64, 256];

/// Nystrom spectrum and Mercer truncation errors.
pub fn cmd_spectral_dump(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let kernel = config.kernel()?;
    let domain = config.domain()?;
    let sc = &config.spectral;
    let rule = nystrom_rule(&domain, sc.nodes)?;
    let model = nystrom_decompose(&kernel, &domain, sc.rank, &rule)?;
    let (xs, ys) = random_pairs(&domain, sc.pairs, config.seed.unwrap_or(0));
    let mut rows = Vec::new();
    for m in MERCER_RANKS.into_iter().filter(|&m| m <= model.rank()) {
        rows.push(vec![m.to_string(), fmt_f64(model.mercer_error(&xs, &ys, m)?)]);
    }
    if !MERCER_RANKS.contains(&model.rank()) {
        rows.push(vec![
            model.rank().to_string(),
            fmt_f64(model.mercer_error(&xs, &ys, model.rank())?),
        ]);
    }
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(vec![
        write(out, "spectrum.csv", &model.spectrum_csv())?,
        write(out, "mercer.csv", &csv_table(&["m", "max_abs_error"], rows))?,
    ])
}
