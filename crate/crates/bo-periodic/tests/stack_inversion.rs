mod common;

use bo_periodic::bifurcation::build_v2;
use bo_periodic::descent::NormalForm;
use bo_periodic::inversion::*;
use bo_periodic::nonlinearity::NonlinearitySpec;
use bo_periodic::stack::*;
use bo_periodic::{Error, ModeIndex, SpectralField};
use num_complex::Complex64;

fn stack_for(name: &str, eps: f64, a: u32) -> Stack {
    let d = common::data23();
    let spec = NonlinearitySpec::catalog(name).unwrap();
    let v2 = build_v2(&d, &spec, eps, a).unwrap();
    Stack::build(&spec, &d, &v2, eps, a).unwrap()
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.distance(b) / b.l2_norm()
}

#[test]
fn conjugation_identity_holds_on_the_ambient_box() {
    let st = stack_for("example-i", 0.05, 12);
    let mut r = common::rng(11);
    for _ in 0..3 {
        let h = project_box(&common::random_field(&mut r, 12, 1.0, false), 12);
        assert!(st.conjugation_defect(&h).unwrap() < 1e-11);
    }
}

#[test]
fn factor_inverses_round_trip() {
    let st = stack_for("example-i", 0.05, 12);
    let mut r = common::rng(12);
    let h = project_box(&common::random_field(&mut r, 12, 1.0, true), 12);
    assert!(rel(&st.psi_phi_inv(&st.psi_phi(&h).unwrap()).unwrap(), &h) < 1e-11);
    assert!(rel(&st.psi_m_phi_inv(&st.psi_m_phi(&h).unwrap()).unwrap(), &h) < 1e-11);
}

#[test]
fn remainder_decays_in_frequency() {
    let st = stack_for("zero", 0.03, 16);
    let col = |j: i32| {
        let e = x_basis(ModeIndex::new(1, j), 16);
        st.residual_r(&e).unwrap().l2_norm()
    };
    let (r4, r8, r16) = (col(4), col(8), col(15));
    assert!(r8 < 0.5 * r4, "{r4} {r8}");
    assert!(r16 < 0.5 * r8, "{r8} {r16}");
}

#[test]
fn kernel_block_scales_like_eps_squared() {
    // P_eps^{-1} calL on V is O(1): 3 i l plus a bounded variable part.
    let d = common::data23();
    let spec = NonlinearitySpec::zero();
    for eps in [0.02, 0.04] {
        let lin = spec.linearize_in_box(&d, &SpectralField::zero(8, 8), eps, 8).unwrap();
        let k = ModeIndex::kernel(2);
        let out = galerkin_l(&lin, &x_basis(k, 8), 8, true);
        let unscaled = galerkin_l(&lin, &x_basis(k, 8), 8, false);
        let vpart = out.get(k).norm();
        assert!(vpart > 1.0 && vpart < 100.0, "{vpart}");
        assert!((unscaled.get(k).norm() / vpart - eps * eps).abs() < 1e-12);
    }
}

#[test]
fn structured_inverse_matches_dense_oracle() {
    let st = stack_for("ux5", 0.05, 10);
    let mut r = common::rng(13);
    let f = project_box(&common::random_field(&mut r, 10, 1.0, true), 10);
    let (h, _) = invert_l4_truncated(&st, &f, 10).unwrap();
    let (ho, os) = dense_oracle_inverse(&st, &f, 10).unwrap();
    assert!(rel(&h, &ho) < 1e-9, "{}", rel(&h, &ho));
    assert!(os.condition.is_finite());
    assert!(rel(&apply_truncated(&st, &h, 10).unwrap(), &f) < 1e-10);
}

#[test]
fn gmres_fallback_handles_a_non_contracting_block() {
    let st = stack_for("example-i", 0.05, 10);
    let mut r = common::rng(14);
    let f = project_box(&common::random_field(&mut r, 10, 1.0, true), 10);
    let inv = LsInverse::new(&st, 10).unwrap();
    let (h, stats) = inv.solve(&f).unwrap();
    assert!(stats.w_residual < 1e-10);
    assert!(rel(&apply_truncated(&st, &h, 10).unwrap(), &f) < 1e-9);
    let mut strict = LsInverse::new(&st, 10).unwrap();
    strict.krylov_fallback = false;
    if stats.method == WMethod::Gmres {
        assert!(matches!(strict.solve(&f), Err(Error::Neumann { .. })));
    }
}

#[test]
fn gmres_solves_a_small_system() {
    let a = [[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]];
    let b = [1.0, 2.0, 3.0];
    let mut it = 0;
    let x = gmres(|v| Ok((0..3).map(|i| (0..3).map(|k| a[i][k] * v[k]).sum::<f64>()).collect()), &b, 1e-14, 10, &mut it).unwrap();
    for i in 0..3 {
        let ax: f64 = (0..3).map(|k| a[i][k] * x[k]).sum();
        assert!((ax - b[i]).abs() < 1e-12);
    }
    assert!(it <= 3);
}

#[test]
fn diophantine_check_finds_a_planted_resonance() {
    // omega = 25/26 makes lambda_{-26,5} vanish off the kernel.
    let nf = NormalForm { omega: 25.0 / 26.0, ..NormalForm::trivial() };
    let rep = diophantine_check(&nf, 8);
    assert!(!rep.pass);
    assert!(rep.violations.iter().any(|w| (w.l, w.j) == (-26, 5)));
    assert!(diophantine_check(&nf, 4).pass);
    assert!(diophantine_check(&NormalForm::trivial(), 40).pass);
}

#[test]
fn truncated_inverse_reports_the_witness() {
    let mut st = stack_for("zero", 0.03, 12);
    st.nf = NormalForm { omega: 25.0 / 26.0, ..NormalForm::trivial() };
    let mut f = SpectralField::zero(12, 12);
    f.set(ModeIndex::new(1, 1), Complex64::new(0.0, 1.0));
    match invert_l4_truncated(&st, &f, 8) {
        Err(Error::Diophantine { l, j }) => assert_eq!((l, j), (-26, 5)),
        other => panic!("expected a Diophantine failure, got {other:?}"),
    }
}

#[test]
fn window_contains_the_near_kernel_band() {
    assert!(in_window(-25, 5, 0.0));
    assert!(!in_window(-24, 5, 0.0));
    assert!(in_window(-24, 5, 0.05));
    assert!((threshold(-2) - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(bracket(0), 1.0);
}
