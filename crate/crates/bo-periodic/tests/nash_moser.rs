mod common;

use bo_periodic::nash_moser::*;
use bo_periodic::nonlinearity::NonlinearitySpec;
use bo_periodic::stack::project_box;
use proptest::prelude::*;

fn problem<'a>(spec: &'a NonlinearitySpec, d: &'a bo_periodic::bifurcation::BifurcationData, eps: f64, cap: u32) -> Problem<'a> {
    let cfg = IterationConfig { n_cap: cap, check_identities: true, ..Default::default() };
    Problem { spec, data: d, eps, cfg }
}

#[test]
fn truncation_schedule_for_two_three() {
    let d = common::data23();
    let cfg = IterationConfig::default();
    let levels: Vec<u32> = (0..6).map(|n| truncation_level(&cfg, &d, n)).collect();
    assert_eq!(levels, [12, 13, 14, 32, 32, 32]);
    assert_eq!(n_min(&d), 12);
}

#[test]
fn config_validation() {
    assert!(IterationConfig::default().validate().is_ok());
    let bad = IterationConfig { chi: 1.0, ..Default::default() };
    assert!(bad.validate().unwrap_err().is_validation());
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let p = Problem { spec: &spec, data: &d, eps: 0.03, cfg: IterationConfig { n_cap: 8, ..Default::default() } };
    assert!(p.run().unwrap_err().is_validation());
}

#[test]
fn cubic_run_converges_and_matches_newton() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let p = problem(&spec, &d, 0.03, 20);
    let st = p.run().unwrap();
    assert_eq!(st.status, Status::Converged, "{:?}", st.history);
    assert!(st.final_residual() <= 1e-10);
    for r in &st.history[1..] {
        assert!(r.rn_defect.unwrap() < 1e-8, "{r:?}");
        assert!(r.taylor_defect.unwrap() < 1e-8, "{r:?}");
        assert!(r.margin > 1.0);
    }
    let o = oracle_newton(&spec, &d, 0.03, 20, 1e-12).unwrap();
    assert!(o.u.distance(&st.u) / o.u.l2_norm() < 1e-7);
    let full: Vec<f64> = st.history.iter().filter(|r| r.truncation == 20).map(|r| r.h_norm).collect();
    assert!(decay_slope(&full, 1e-13).unwrap() >= 1.5, "{full:?}");
}

#[test]
fn quartic_case_converges() {
    let d = common::data23();
    let spec = NonlinearitySpec::example_i();
    let st = problem(&spec, &d, 0.02, 16).run().unwrap();
    assert_eq!(st.status, Status::Converged, "{:?}", st.history);
    assert!(st.history.iter().skip(1).all(|r| r.rn_defect.unwrap() < 1e-8));
}

#[test]
fn original_residual_is_truncation_limited() {
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    let eps = 0.03;
    let mut full = Vec::new();
    for cap in [16, 24] {
        let st = problem(&spec, &d, eps, cap).run().unwrap();
        let u_eps = physical_solution(&d, &st.u, eps);
        let raw = spec.eval_raw(&u_eps, 1.0 + 3.0 * eps * eps).unwrap();
        assert!(project_box(&raw, cap).l2_norm() < 1e-12);
        full.push(original_residual(&spec, &d, &st.u, eps).unwrap());
    }
    assert!(full[1] < 0.5 * full[0], "{full:?}");
}

#[test]
fn slope_of_a_quadratic_sequence() {
    let h: Vec<f64> = (0..4).map(|n| 0.1f64.powi(1 << n)).collect();
    assert!((decay_slope(&h, 1e-300).unwrap() - 2.0).abs() < 1e-12);
    assert!(decay_slope(&h[..2], 0.0).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smoothing_inequalities(seed in 0u64..10_000, n in 2u32..10, a in 1u32..3, s in 0.0f64..3.0) {
        let mut r = common::rng(seed);
        let u = common::random_field(&mut r, 14, 1.0, false);
        let (r1, r2) = smoothing_ratios(&u, n, s, a as f64);
        prop_assert!(r1 <= 1.0 + 1e-12);
        prop_assert!(r2 <= 1.0 + 1e-12);
    }
}
