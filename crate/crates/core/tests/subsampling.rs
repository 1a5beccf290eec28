use rbf_lab::functions::f_omega;
use rbf_lab::geometry::{Domain, PointSet};
use rbf_lab::kernels::RadialKernel;
use rbf_lab::subsampling::{
    build_nested_sequence, build_patch_cover, max_subsample_scale, subsample_with, SubsampleOptions,
};

#[test]
fn patch_measures_meet_their_bounds() {
    for domain in [Domain::unit_interval(), Domain::unit_disk()] {
        for n in [16, 64, 256] {
            let cover = build_patch_cover(&domain, n).unwrap();
            let b = cover.bounds(&domain);
            assert!(b.holds, "{n}: {b:?}");
            assert!((cover.total_measure() - domain.volume()).abs() < 1e-9);
        }
    }
}

#[test]
fn riemann_sum_stays_within_twice_the_integral() {
    let omega = Domain::unit_interval();
    let y0 = PointSet::from_1d(&[0.2, 0.7]);
    let q = max_subsample_scale(&omega, &y0);
    let opts = SubsampleOptions {
        verify_riemann: true,
        ..SubsampleOptions::default()
    };
    let r = subsample_with(&omega, |p: &[f64]| (7.0 * p[0]).sin() + 0.3, &y0, q, &opts).unwrap();
    assert!(r.all_ok());
    let check = r.riemann.unwrap();
    assert!(check.within_factor_two, "{check:?}");
    assert!(r.certificate.slice_min <= r.certificate.slice_mean);
    assert!(r.certificate.sizes_within_bounds, "{:?}", r.certificate);
}

#[test]
fn one_level_sequence() {
    let omega = Domain::unit_interval();
    let seq = build_nested_sequence(
        &omega,
        &RadialKernel::matern_exp(),
        |p: &[f64]| f_omega(0.81, p[0]),
        1,
        0.25,
    )
    .unwrap();
    assert_eq!(seq.sets[0].len(), 5);
    assert!((seq.a * 704.0 / 3.0 - 1.0).abs() < 1e-14);
    let level = &seq.levels[0];
    assert!(level.sandwich_ok && level.ratio_ok, "{level:?}");
    assert!(seq.sets[1].len() > seq.sets[0].len());
    assert!(seq.sets[0].positions_in(&seq.sets[1]).is_ok());
}
