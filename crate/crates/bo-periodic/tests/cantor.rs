mod common;

use bo_periodic::cantor::*;
use bo_periodic::inversion::in_window;
use bo_periodic::nash_moser::{IterationConfig, Status};
use bo_periodic::nonlinearity::NonlinearitySpec;

fn widths(name: &str) -> ExclusionTable {
    let d = common::data23();
    let spec = NonlinearitySpec::catalog(name).unwrap();
    let wc = WidthConfig { eps_min: 0.005, eps_max: 0.05, j_max: 32, box_a: n_box(&d), nodes: DEFAULT_NODES };
    exclusion_widths(&d, &spec, &wc).unwrap()
}

#[test]
fn zeroth_order_exclusions_have_quartic_widths() {
    for name in ["zero", "example-i"] {
        let t = widths(name);
        assert!(t.interpolation_error < 1e-10, "{name}: {}", t.interpolation_error);
        let ratio = t.width_ratio(8..=32).unwrap();
        assert!(ratio <= 10.0, "{name}: {ratio}");
        assert!(t.rows.iter().all(|r| r.in_window && r.l + r.j * r.j != 0));
        for s in &t.per_j {
            if s.count > 0 || s.j >= 8 {
                assert!(s.monotone, "{name}: p_{} not monotone", s.j);
            }
            assert!(s.count_scaled < 10.0);
        }
        // more exclusions for larger |j|
        let count = |j: i64| t.per_j.iter().find(|s| s.j == j).unwrap().count;
        assert!(count(32) > count(16));
    }
}

#[test]
fn interpolated_normal_form_matches_direct_evaluation() {
    let d = common::data23();
    let spec = NonlinearitySpec::example_i();
    let c = NormalFormCurve::sample(&d, &spec, 0.01, 0.04, 12, 12).unwrap();
    let e = 0.0271;
    let direct = zeroth_normal_form(&d, &spec, e, 12).unwrap();
    let interp = c.at(e);
    assert!((direct.mu1 - interp.mu1).abs() < 1e-10);
    assert!((direct.mu_m2 - interp.mu_m2).abs() < 1e-10);
}

#[test]
fn small_eps_scan_is_all_good() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let cfg = ScanConfig { eps_min: 0.005, eps_max: 0.02, grid_points: 6, ..Default::default() };
    let rep = scan(&cfg, &d, &spec).unwrap();
    assert_eq!(rep.good_fraction, 1.0);
    assert!(rep.bad_intervals.is_empty());
    assert!(rep.per_eps.iter().all(|r| r.min_margin > 1.0));
}

#[test]
fn scan_localizes_a_bad_interval() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let cfg = ScanConfig { eps_min: 0.0402, eps_max: 0.0410, grid_points: 3, ..Default::default() };
    let rep = scan(&cfg, &d, &spec).unwrap();
    assert!(!rep.bad_intervals.is_empty());
    for b in &rep.bad_intervals {
        assert_ne!(b.witness, (0, 0));
        assert!(in_window(b.witness.0, b.witness.1, b.lo));
        assert!(b.hi - b.lo < 1e-4);
    }
    for w in rep.bad_intervals.windows(2) {
        assert!(w[0].hi < w[1].lo);
    }
    let bad: Vec<_> = rep.per_eps.iter().filter(|r| r.is_bad()).collect();
    assert!(bad.iter().all(|r| r.witness.is_some()));
    assert!((0.0..=1.0).contains(&rep.good_fraction));
}

#[test]
fn classification_is_reproducible() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let solver = IterationConfig { n_cap: 14, ..Default::default() };
    let a = classify(&d, &spec, &solver, 0.03, false);
    let b = classify(&d, &spec, &solver, 0.03, false);
    assert_eq!(a.status, Status::Converged);
    assert_eq!(a.final_residual.to_bits(), b.final_residual.to_bits());
    assert_eq!(a.min_margin.to_bits(), b.min_margin.to_bits());
}

#[test]
fn trend_prefixes_are_nested() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let cfg = ScanConfig {
        eps_min: 0.01,
        eps_max: 0.03,
        grid_points: 10,
        probe_predicted: false,
        solver: IterationConfig { n_cap: 14, ..Default::default() },
        ..Default::default()
    };
    let rep = scan(&cfg, &d, &spec).unwrap();
    assert_eq!(rep.trend.len(), 10);
    for w in rep.trend.windows(2) {
        assert!(w[0].eps0 <= w[1].eps0 && w[0].points <= w[1].points);
        assert!(w[0].good_fraction >= w[1].good_fraction);
    }
    assert_eq!(rep.trend.last().unwrap().points, 10);
}

#[test]
fn invalid_scan_config_is_rejected() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let cfg = ScanConfig { eps_min: 0.02, eps_max: 0.01, ..Default::default() };
    assert!(scan(&cfg, &d, &spec).unwrap_err().is_validation());
}
