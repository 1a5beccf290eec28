use proptest::prelude::*;

use rbf_lab::geometry::{check_geometric_bounds, geometric_constants, Domain, GreedyRun, PointSet};

fn domains() -> Vec<Domain> {
    vec![
        Domain::unit_interval(),
        Domain::interval(-2.0, 3.0).unwrap(),
        Domain::cuboid(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap(),
        Domain::unit_disk(),
        Domain::cuboid(vec![0.0; 3], vec![1.0; 3]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn greedy_prefixes_satisfy_the_sandwich(which in 0usize..5, start in 0.0f64..1.0, n in 2usize..120) {
        let domain = &domains()[which];
        let grid = domain.candidate_grid();
        let idx = ((grid.len() - 1) as f64 * start) as usize;
        let seed = grid.points().point(idx).to_vec();
        let mut run = GreedyRun::new(domain, Some(&seed)).unwrap();
        run.extend_to(n).unwrap();
        let slack = grid.resolution();
        let pts = run.points();
        for m in 2..=n {
            let prefix = pts.subset(&(0..m).collect::<Vec<_>>());
            let q = prefix.separation_distance().unwrap();
            let s = run.stats();
            prop_assert!(0.5 * s[m - 2].h <= q + slack);
            prop_assert!(q <= s[m - 1].h + slack);
            prop_assert!(s[m - 1].h <= s[m - 2].h);
        }
    }

    #[test]
    fn fill_dominates_separation(coords in prop::collection::vec(0.0f64..1.0, 2..40)) {
        let x = PointSet::from_1d(&coords);
        prop_assume!(x.check_distinct().is_ok());
        let omega = Domain::unit_interval();
        let h = x.fill_distance(&omega).unwrap();
        let q = x.separation_distance().unwrap();
        prop_assert!(q <= h + omega.candidate_grid().resolution());
    }

    #[test]
    fn csv_round_trips(dim in 1usize..4, raw in prop::collection::vec(-1e6f64..1e6, 0..60)) {
        let len = raw.len() / dim * dim;
        let x = PointSet::new(dim, raw[..len].to_vec()).unwrap();
        prop_assert_eq!(PointSet::parse_csv(&x.to_csv()).unwrap(), x);
    }

    #[test]
    fn csv_parser_never_panics(text in ".{0,200}") {
        let _ = PointSet::parse_csv(&text);
    }
}

#[test]
fn interval_constants() {
    let k = geometric_constants(&Domain::unit_interval());
    assert!((k.c_tilde - 2048.0).abs() < 1e-9);
    assert!((k.c_omega - 0.5).abs() < 1e-15);
}

#[test]
fn equidistant_sets_meet_volume_bounds() {
    for n in [5, 33, 257] {
        let r = check_geometric_bounds(&PointSet::equidistant(0.0, 1.0, n), &Domain::unit_interval()).unwrap();
        assert!(r.h_ok && r.q_ok, "{r:?}");
    }
}

#[test]
fn disk_greedy_meets_volume_bounds() {
    let disk = Domain::unit_disk();
    let mut run = GreedyRun::new(&disk, None).unwrap();
    run.extend_to(64).unwrap();
    for m in [8, 16, 64] {
        let r = check_geometric_bounds(&run.prefix(m), &disk).unwrap();
        assert!(r.h_ok && r.q_ok, "{r:?}");
    }
}
