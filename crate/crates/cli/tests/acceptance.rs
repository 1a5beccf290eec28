//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 5`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbf_lab::functions::f_omega;
use rbf_lab::geometry::{geometric_constants, Domain, GreedyRun, PointSet};
use rbf_lab::interpolation::{fit, min_eig_lower_bound_check, native_norm_bound};
use rbf_lab::kernels::RadialKernel;
use rbf_lab::rates::{
    cauchy_diagnostic, figure2_ns, figure2_reference, figure2_study, fit_rate_pairs, ConvergenceRecord, FIGURE2_OMEGAS,
};
use rbf_lab::spectral::{holder_check_coeffs, nystrom_decompose, nystrom_rule, CheckStatus, SpectralModel};
use rbf_lab::subsampling::{max_subsample_scale, subsample};
use rbf_lab::Result;
use rbf_lab_cli::commands::random_pairs;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn matern_model(rank: usize, nodes: usize) -> Result<SpectralModel> {
    let omega = Domain::unit_interval();
    let rule = nystrom_rule(&omega, nodes)?;
    nystrom_decompose(&RadialKernel::matern_exp(), &omega, rank, &rule)
}

fn figure2_match(studies: &[Vec<ConvergenceRecord>]) -> Result<Outcome> {
    let reference = figure2_reference();
    let mut worst_small = 0.0f64;
    let mut worst_large = 0.0f64;
    let mut missing = 0;
    for (&w, records) in FIGURE2_OMEGAS.iter().zip(studies) {
        for r in records {
            let Some(&(_, _, expected)) = reference.iter().find(|x| x.0 == w && x.1 == r.n) else {
                missing += 1;
                continue;
            };
            let rel = (r.err_l2_omega / expected - 1.0).abs();
            let rel = if rel.is_nan() { f64::INFINITY } else { rel };
            if r.n <= 1025 {
                worst_small = worst_small.max(rel);
            } else {
                worst_large = worst_large.max(rel);
            }
        }
    }
    let cells: usize = studies.iter().map(Vec::len).sum();
    outcome(
        missing == 0 && cells == 72 && worst_small <= 0.01 && worst_large <= 0.05,
        format!("{cells} cells; max rel err {worst_small:.2e} (n <= 1025), {worst_large:.2e} (n >= 2049)"),
    )
}

/// Slope `mu` of `err ~ n^-mu` over the last four records.
fn tail_slope(data: &[(usize, f64)]) -> Result<f64> {
    let triples: Vec<_> = data.iter().map(|&(n, e)| (n, 1.0 / n as f64, e)).collect();
    Ok(fit_rate_pairs(&triples, 4)?.mu)
}

fn tail_rates(studies: &[Vec<ConvergenceRecord>]) -> Result<Outcome> {
    let reference = figure2_reference();
    let mut pass = true;
    let mut parts = Vec::new();
    for (&w, records) in FIGURE2_OMEGAS.iter().zip(studies) {
        let mu = tail_slope(&records.iter().map(|r| (r.n, r.err_l2_omega)).collect::<Vec<_>>())?;
        let target = if w < 0.2 {
            let table: Vec<_> = reference.iter().filter(|r| r.0 == w).collect();
            let (a, b) = (table[table.len() - 2], table[table.len() - 1]);
            (a.2 / b.2).log2() / ((b.1 - 1) as f64 / (a.1 - 1) as f64).log2()
        } else if w < 0.6 {
            0.91
        } else if w < 1.0 {
            1.31
        } else {
            2.0
        };
        let ok = (mu - target).abs() <= 0.1;
        pass &= ok;
        parts.push(format!("w={w}: {mu:.3} vs {target:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn greedy_guarantee() -> Result<Outcome> {
    let domains = [
        ("interval", Domain::unit_interval()),
        ("box", Domain::cuboid(vec![0.0, 0.0], vec![1.0, 1.0])?),
        ("disk", Domain::unit_disk()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    let mut violations = 0usize;
    for (_, domain) in &domains {
        let grid = domain.candidate_grid();
        let slack = grid.resolution();
        for _ in 0..8 {
            let start = grid.points().point(rng.random_range(0..grid.len())).to_vec();
            let mut run = GreedyRun::new(domain, Some(&start))?;
            run.extend_to(256)?;
            let pts = run.points();
            for m in 2..=256 {
                let prefix = pts.subset(&(0..m).collect::<Vec<_>>());
                let q = prefix.separation_distance()?;
                let h = run.stats()[m - 1].h;
                let h_prev = run.stats()[m - 2].h;
                checked += 1;
                if !(0.5 * h_prev <= q + slack && q <= h + slack) {
                    violations += 1;
                }
                if [2, 64, 256].contains(&m) && (prefix.fill_distance(domain)? - h).abs() > 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{checked} prefixes over interval, box, disk; {violations} violations"),
    )
}

fn stability_scaling() -> Result<Outcome> {
    let kernel = RadialKernel::matern_exp();
    let mut pts = Vec::new();
    for k in 3..=9 {
        let n = (1usize << k) + 1;
        let r = min_eig_lower_bound_check(&kernel, &PointSet::equidistant(0.0, 1.0, n))?;
        pts.push((r.q.ln(), r.lambda_min.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(
        (slope - 1.0).abs() <= 0.2,
        format!("slope {slope:.4}, expected 1 +- 0.2"),
    )
}

fn random_points(domain: &Domain, n: usize, min_dist: f64, rng: &mut ChaCha8Rng) -> PointSet {
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut attempts = 0;
    while coords.len() < n && attempts < 100_000 {
        attempts += 1;
        let (p, _) = random_pairs(domain, 1, rng.random());
        let p = p.point(0).to_vec();
        if coords.iter().all(|c| rbf_lab::geometry::distance(c, &p) >= min_dist) {
            coords.push(p);
        }
    }
    let flat: Vec<f64> = coords.concat();
    PointSet::new(domain.dim(), flat).expect("finite points")
}

fn native_norm_inequality() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases = [
        (RadialKernel::matern_exp(), Domain::unit_interval()),
        (RadialKernel::wendland_c0(), Domain::unit_interval()),
        (RadialKernel::wendland_c2(), Domain::unit_disk()),
    ];
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (kernel, domain) = &cases[i % cases.len()];
        let n = rng.random_range(1..=64);
        let x = random_points(domain, n, 1e-4, &mut rng);
        let values: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let report = native_norm_bound(&fit(kernel, &x, &values)?)?;
        worst = worst.max(report.lhs / report.rhs);
        if report.lhs > report.rhs * (1.0 + 1e-8) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("100 instances, {violations} violations, max lhs/rhs {worst:.4}"),
    )
}

fn random_g(d: usize, rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> f64 {
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            let amp = rng.random_range(-1.0..1.0);
            let freq = (0..d).map(|_| rng.random_range(-12.0..12.0)).collect();
            (amp, freq, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let kink: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..1.0)).collect();
    let kink_amp = rng.random_range(0.0..1.0);
    move |p: &[f64]| {
        let waves: f64 = terms
            .iter()
            .map(|(a, w, phase)| a * (w.iter().zip(p).map(|(wi, xi)| wi * xi).sum::<f64>() + phase).cos())
            .sum();
        waves + kink_amp * rbf_lab::geometry::distance(&kink, p)
    }
}

fn subsampling_pipeline() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for i in 0..20 {
        let (domain, min_dist, max_y0) = if i % 2 == 0 {
            (Domain::unit_interval(), 0.05, 6)
        } else {
            (Domain::unit_disk(), 0.4, 5)
        };
        let y0 = random_points(&domain, rng.random_range(0..=max_y0), min_dist, &mut rng);
        let q = rng.random_range(0.5..1.0) * max_subsample_scale(&domain, &y0);
        let g = random_g(domain.dim(), &mut rng);
        let r = subsample(&domain, &g, &y0, q, None)?;
        let c = geometric_constants(&domain).c_tilde;
        worst_ratio = worst_ratio.max(r.norm_ratio / c.sqrt());
        if !r.all_ok() {
            violations.push(format!(
                "instance {i}: sandwich {} union {} ratio {}",
                r.sandwich_ok, r.union_ok, r.ratio_ok
            ));
        }
    }
    let c_interval = geometric_constants(&Domain::unit_interval()).c_tilde;
    outcome(
        violations.is_empty() && (c_interval - 2048.0).abs() < 1e-9,
        format!(
            "20 instances (interval, disk), C~[0,1] = {c_interval}; max ratio/sqrt(C~) {worst_ratio:.4}; {}",
            if violations.is_empty() {
                "no violations".to_string()
            } else {
                violations.join(", ")
            }
        ),
    )
}

fn holder_interpolation() -> Result<Outcome> {
    let model = matern_model(64, 512)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let mut worst_single = 0.0f64;
    for i in 0..100 {
        let mut coeffs = vec![0.0; model.rank()];
        let single = i % 5 == 0;
        let modes = if single { 1 } else { rng.random_range(2..=16) };
        for _ in 0..modes {
            coeffs[rng.random_range(0..48)] = rng.random_range(-1.0..1.0);
        }
        let mut t: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.5)).collect();
        t.sort_by(f64::total_cmp);
        let r = holder_check_coeffs(&model, &coeffs, t[0], t[1], t[2])?;
        if r.status != CheckStatus::Holds {
            violations += 1;
        }
        if single {
            worst_single = worst_single.max((r.lhs / r.rhs - 1.0).abs());
        }
    }
    outcome(
        violations == 0 && worst_single <= 1e-8,
        format!("100 functions, {violations} violations; single-mode max |lhs/rhs - 1| {worst_single:.2e}"),
    )
}

fn cauchy() -> Result<Outcome> {
    let model = matern_model(256, 1024)?;
    let sets: Vec<PointSet> = (3..=8).map(|k| PointSet::equidistant(0.0, 1.0, (1 << k) + 1)).collect();
    let diag = cauchy_diagnostic(
        &RadialKernel::matern_exp(),
        &sets,
        |p: &[f64]| f_omega(0.81, p[0]),
        0.5,
        &model,
    )?;
    let bounded = diag.levels.iter().all(|l| l.within_bound);
    let decaying = diag.levels.iter().skip(1).all(|l| l.ratio.is_some_and(|r| r < 1.0));
    let ratios: Vec<String> = diag
        .levels
        .iter()
        .filter_map(|l| l.ratio.map(|r| format!("{r:.3}")))
        .collect();
    let margins: Vec<String> = diag
        .levels
        .iter()
        .map(|l| format!("{:.2e}", l.increment_norm / l.bound))
        .collect();
    outcome(
        diag.levels.len() == 5 && bounded && decaying && diag.truncated.is_none(),
        format!(
            "{} levels; ratios [{}]; norm/bound [{}]",
            diag.levels.len(),
            ratios.join(", "),
            margins.join(", ")
        ),
    )
}

fn mercer() -> Result<Outcome> {
    let model = matern_model(256, 1024)?;
    let (xs, ys) = random_pairs(&Domain::unit_interval(), 100, 13);
    let errs: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&m| model.mercer_error(&xs, &ys, m))
        .collect::<Result<_>>()?;
    outcome(
        errs.windows(2).all(|w| w[1] < w[0]),
        format!("max errors {:.3e}, {:.3e}, {:.3e}", errs[0], errs[1], errs[2]),
    )
}

fn report(id: usize, name: &str, run: impl FnOnce() -> Result<Outcome>) -> bool {
    let t = Instant::now();
    let (pass, detail) = match run() {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} [{id}] {name}: {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: usize| selected.is_empty() || selected.contains(&id);
    let mut all = true;
    if want(1) || want(2) {
        let t = Instant::now();
        let studies = figure2_study(&figure2_ns());
        println!("       reference studies computed in {:.1}s", t.elapsed().as_secs_f64());
        match studies {
            Ok(s) => {
                if want(1) {
                    all &= report(1, "reference table reproduction", || figure2_match(&s));
                }
                if want(2) {
                    all &= report(2, "tail rates", || tail_rates(&s));
                }
            }
            Err(e) => {
                for id in [1, 2].into_iter().filter(|&i| want(i)) {
                    println!("FAIL [{id}] reference study failed: {e}");
                }
                all = false;
            }
        }
    }
    let rest: [(usize, &str, fn() -> Result<Outcome>); 7] = [
        (3, "greedy guarantee", greedy_guarantee),
        (4, "stability scaling", stability_scaling),
        (5, "native norm inequality", native_norm_inequality),
        (6, "subsampling pipeline", subsampling_pipeline),
        (7, "Holder interpolation", holder_interpolation),
        (8, "Cauchy diagnostic", cauchy),
        (9, "Mercer reconstruction", mercer),
    ];
    for (id, name, run) in rest {
        if want(id) {
            all &= report(id, name, run);
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
