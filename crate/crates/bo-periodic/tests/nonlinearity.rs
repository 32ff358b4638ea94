mod common;

use bo_periodic::nonlinearity::{NonlinearitySpec, CATALOG};
use bo_periodic::spectral::PARITY_TOL;
use bo_periodic::{ModeIndex, Multiplier, Parity, SpectralField, Subspace};
use num_complex::Complex64;
use proptest::prelude::*;

fn cos_x_minus_t() -> SpectralField {
    SpectralField::mode(ModeIndex::new(-1, 1), Complex64::new(0.5, 0.0), 1, 1)
}

#[test]
fn zero_spec_matches_hand_convolution_of_cos_cubed() {
    // cos^3 s = (3 cos s + cos 3s) / 4, so d_x cos^3(x - t) = -(3 sin s + 3 sin 3s) / 4
    let n = NonlinearitySpec::zero().eval_n(&cos_x_minus_t()).unwrap();
    assert!((n.get(ModeIndex::new(-1, 1)) - Complex64::new(0.0, 0.375)).norm() < 1e-13);
    assert!((n.get(ModeIndex::new(-3, 3)) - Complex64::new(0.0, 0.375)).norm() < 1e-13);
    assert!(n.l2_norm() - (2.0f64 * 0.375 * 0.375 * 2.0).sqrt() < 1e-13);
}

#[test]
fn quartic_part_scales_like_eps4() {
    let mut r = common::rng(3);
    let u = common::random_field(&mut r, 6, 0.5, false);
    for name in ["example-i", "example-ii"] {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e| spec.n4_scaled(&u.scale(e), 1.0, 0).unwrap().l2_norm() / e.powi(4))
            .collect();
        assert!(ratios.iter().all(|r| r.is_finite() && *r < 2.0 * ratios[2] + 1.0), "{name}: {ratios:?}");
        assert!((ratios[1] - ratios[2]).abs() < 0.02 * ratios[2], "{name}: {ratios:?}");
    }
}

#[test]
fn f_vanishes_on_v_for_zero_spec_at_origin() {
    let d = common::data23();
    let eps = 0.05;
    let f = NonlinearitySpec::zero().eval_f(&d, &SpectralField::zero(12, 12), eps).unwrap();
    assert!(f.project(Subspace::V).max_coeff() < 1e-13);
    let oracle = d.v1.product(&d.v1).unwrap().product(&d.v1).unwrap().apply(Multiplier::Dx).scale(eps);
    assert!(f.max_abs_diff(&oracle.project(Subspace::W)) < 1e-14);
}

#[test]
fn expanded_and_raw_routes_agree() {
    let d = common::data23();
    let mut r = common::rng(5);
    let u = common::random_field(&mut r, 12, 0.3, false);
    for name in CATALOG {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let a = spec.eval_f(&d, &u, 0.05).unwrap();
        let b = spec.eval_f_raw(&d, &u, 0.05).unwrap();
        let rel = a.distance(&b) / a.l2_norm();
        assert!(rel < 1e-8, "{name}: {rel:e}");
    }
}

#[test]
fn linear_coefficients_of_zero_spec() {
    let d = common::data23();
    let mut r = common::rng(7);
    let u = common::random_field(&mut r, 12, 0.3, false);
    let eps = 0.05;
    let lin = NonlinearitySpec::zero().linearize(&d, &u, eps).unwrap();
    for i in [1, 2, 4] {
        assert_eq!(lin.a(i).max_coeff(), 0.0);
    }
    let big_u = d.v1.scale(eps).axpy(eps * eps, &u);
    let u2 = big_u.product(&big_u).unwrap().scale(3.0);
    assert!(lin.a(3).max_abs_diff(&u2) < 1e-15);
    assert!(lin.a(5).max_abs_diff(&u2.apply(Multiplier::Dx)) < 1e-15);
}

#[test]
fn coefficient_parity_and_case_identities() {
    let d = common::data23();
    let mut r = common::rng(9);
    let u = common::random_field(&mut r, 12, 0.3, false);
    for name in ["example-i", "example-ii"] {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let lin = spec.linearize(&d, &u, 0.05).unwrap();
        for (i, want) in [(1, Parity::Even), (2, Parity::Odd), (3, Parity::Even), (4, Parity::Even), (5, Parity::Odd)] {
            let a = lin.a(i);
            let (e, o) = a.parity_masses();
            let scale = (e + o).max(1e-300);
            let bad = if want == Parity::Even { o } else { e };
            assert!(bad <= 1e-10 * scale + PARITY_TOL * 1e-3, "{name} a{i}: {e:e} {o:e}");
        }
        if name == "example-i" {
            assert!(lin.a(2).max_abs_diff(&lin.a(1).apply(Multiplier::Dx)) < 1e-10);
        } else {
            assert_eq!(lin.a(2).max_coeff(), 0.0);
        }
    }
}

#[test]
fn a1_is_cubic_in_eps() {
    let d = common::data23();
    let u = SpectralField::zero(12, 12);
    for name in ["example-i", "example-ii"] {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let s: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&e| spec.linearize(&d, &u, e).unwrap().sup(1)).collect();
        for w in s.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(slope > 2.9, "{name}: {s:?}");
        }
    }
}

#[test]
fn directional_derivative_of_n_has_slope_one() {
    let spec = NonlinearitySpec::catalog("example-ii").unwrap();
    let mut r = common::rng(11);
    let u = common::random_field(&mut r, 5, 0.05, false);
    let h = common::random_field(&mut r, 5, 0.2, false);
    // eps = 1 and v1 = 0 turn calL into N'(u) plus the linear part.
    let d0 = {
        let mut d = common::data23();
        d.v1 = SpectralField::zero(1, 1);
        d
    };
    let lin = spec.linearize(&d0, &u, 1.0).unwrap();
    let lh = lin.apply(&h);
    let lin_part = h
        .apply(Multiplier::Dt)
        .scale(lin.omega)
        .axpy(1.0, &h.apply(Multiplier::Hilbert).map_symbol(|k| Complex64::new(-(k.j as f64).powi(2), 0.0)));
    let n_prime_h = lh.axpy(-1.0, &lin_part);
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&tau| {
            let fd = spec.eval_n(&u.axpy(tau, &h)).unwrap().axpy(-1.0, &spec.eval_n(&u).unwrap()).scale(1.0 / tau);
            fd.distance(&n_prime_h)
        })
        .collect();
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 1.0).abs() < 0.1, "{errs:?}");
    }
}

#[test]
fn q_is_quadratic() {
    let d = common::data23();
    let mut r = common::rng(13);
    let u = common::random_field(&mut r, 12, 0.3, false);
    let h = common::random_field(&mut r, 12, 0.3, false);
    let spec = NonlinearitySpec::catalog("example-i").unwrap();
    let eps = 0.05;
    assert!(spec.eval_q(&d, &u, &SpectralField::zero(12, 12), eps).unwrap().max_coeff() < 1e-13);
    let q: Vec<f64> = [1e-1, 5e-2, 2.5e-2]
        .iter()
        .map(|&t| spec.eval_q(&d, &u, &h.scale(t), eps).unwrap().l2_norm() / (t * t))
        .collect();
    assert!((q[1] / q[2] - 1.0).abs() < 0.2, "{q:?}");
}

#[test]
fn linearization_matches_central_differences_of_f() {
    let d = common::data23();
    let mut r = common::rng(17);
    let u = common::random_field(&mut r, 12, 0.3, false);
    let eps = 0.05;
    for name in CATALOG {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let lin = spec.linearize(&d, &u, eps).unwrap();
        for _ in 0..3 {
            let h = common::random_field(&mut r, 12, 1.0, false);
            let step = 1e-4;
            let fp = spec.eval_f(&d, &u.axpy(step, &h), eps).unwrap();
            let fm = spec.eval_f(&d, &u.axpy(-step, &h), eps).unwrap();
            let fd = fp.axpy(-1.0, &fm).scale(0.5 / step);
            let an = lin.apply_f_prime(&h);
            let rel = fd.distance(&an) / an.l2_norm();
            assert!(rel < 1e-6, "{name}: {rel:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn n_maps_x_to_y(seed in any::<u64>(), which in 0usize..4) {
        let spec = NonlinearitySpec::catalog(CATALOG[which]).unwrap();
        let mut r = common::rng(seed);
        let u = common::random_field(&mut r, 4, 0.1, false);
        let n = spec.eval_n(&u).unwrap();
        let (e, o) = n.parity_masses();
        prop_assert!(e <= 1e-12 * (o + 1e-300) + 1e-17, "even mass {e:e}, odd {o:e}");
    }

    #[test]
    fn f_maps_x0_to_y(seed in any::<u64>(), which in 0usize..4) {
        let spec = NonlinearitySpec::catalog(CATALOG[which]).unwrap();
        let mut r = common::rng(seed);
        let u = common::random_field(&mut r, 12, 0.3, false);
        let f = spec.eval_f(&common::data23(), &u, 0.03).unwrap();
        let (e, o) = f.parity_masses();
        prop_assert!(e <= 1e-12 * o, "even mass {e:e}, odd {o:e}");
    }
}
