mod common;

use bo_periodic::descent::{compute_descent_chain, compute_phi, descend, NormalForm};
use bo_periodic::diffeo::{build_diffeo, Direction, TransformedCoefficients};
use bo_periodic::grid::Grid;
use bo_periodic::nonlinearity::NonlinearitySpec;
use bo_periodic::SpectralField;
use num_complex::Complex64;

fn tc_for(name: &str, eps: f64, u: &SpectralField) -> TransformedCoefficients {
    tc_in_box(name, eps, u, 16)
}

fn tc_in_box(name: &str, eps: f64, u: &SpectralField, box_a: u32) -> TransformedCoefficients {
    let d = common::data23();
    let lin = NonlinearitySpec::catalog(name).unwrap().linearize_in_box(&d, u, eps, box_a).unwrap();
    build_diffeo(&lin).unwrap().1
}

fn random_u(seed: u64) -> SpectralField {
    let mut r = common::rng(seed);
    common::random_field(&mut r, 12, 0.3, false)
}

#[test]
fn trivial_coefficients_give_identity() {
    let g = Grid::new(16, 16);
    let z = g.zeros();
    let tc = TransformedCoefficients {
        mu2: 1.0,
        mu1: 0.0,
        omega: 1.0,
        grid: g.clone(),
        vals: [z.clone(), z.clone(), z.clone(), z.clone()],
        rho: g.constant(Complex64::new(1.0, 0.0)),
        sigma: z.clone(),
        m_factor: vec![1.0; 16],
        band: 7,
    };
    let dd = descend(&tc);
    assert_eq!(dd.phi.sup(), 0.0);
    assert!(dd.eta.iter().all(|e| e.sup() == 0.0));
    assert_eq!((dd.mu0, dd.mu_m2), (0.0, 0.0));
    let mut r = common::rng(1);
    let u = common::random_field(&mut r, 6, 1.0, false);
    for dir in [Direction::Forward, Direction::Inverse] {
        assert!(dd.apply_phi(&u, dir, 6, 6).unwrap().max_abs_diff(&u) < 1e-15);
    }
}

#[test]
fn phi_solves_its_equation_with_the_right_parity() {
    let tc = tc_for("example-i", 0.05, &random_u(2));
    let dd = descend(&tc);
    assert!(dd.phi_residual() <= 1e-10, "{:e}", dd.phi_residual());
    let (re, im) = dd.split(&dd.phi);
    let (e, o) = re.parity_masses();
    assert!(o <= 1e-10 * e);
    let (e, o) = im.parity_masses();
    assert!(e <= 1e-10 * o);
    // exp(phi) never vanishes and |f0|^2 = e^{2 Re phi}
    let defect = dd.f[0].zip(&dd.phi, |f, p| Complex64::new(f.norm_sqr() - (2.0 * p.re).exp(), 0.0));
    assert!(defect.sup() < 1e-14);
}

#[test]
fn descent_equations_hold() {
    // example-ii carries (Hu_xx)^4, whose coefficients need a wider box to resolve
    for (name, eps, box_a) in [("example-i", 0.05, 16), ("ux5", 0.05, 16), ("example-ii", 0.02, 24), ("zero", 0.05, 16)] {
        let tc = tc_in_box(name, eps, &random_u(3), box_a);
        let dd = descend(&tc);
        let t = dd.t_residuals();
        assert!(t.iter().all(|&x| x <= 1e-9), "{name}: {t:?}");
        let s = dd.solvability_residuals();
        assert!(s.iter().all(|&x| x <= 1e-10), "{name}: {s:?}");
        assert!(dd.c0.re.abs() <= 1e-12 && dd.c_m2.re.abs() <= 1e-12, "{name}: {} {}", dd.c0, dd.c_m2);
    }
}

#[test]
fn parity_chain() {
    let tc = tc_for("example-i", 0.05, &random_u(4));
    let dd = descend(&tc);
    // g0, eta1, g2, eta3 in Y + iX; g1, eta2 in X + iY
    let checks = [(&dd.g[0], true), (&dd.eta[0], true), (&dd.g[2], true), (&dd.eta[2], true), (&dd.g[1], false), (&dd.eta[1], false)];
    for (i, (f, re_odd)) in checks.iter().enumerate() {
        let (re, im) = dd.split(f);
        let (re_e, re_o) = re.parity_masses();
        let (im_e, im_o) = im.parity_masses();
        let (bad, good) = if *re_odd { (re_e + im_o, re_o + im_e) } else { (re_o + im_e, re_e + im_o) };
        assert!(bad <= 1e-10 * good + 1e-18, "entry {i}: {bad:e} vs {good:e}");
    }
}

#[test]
fn mu0_matches_quadrature() {
    let tc = tc_for("example-i", 0.05, &random_u(5));
    let dd = descend(&tc);
    let g = &tc.grid;
    let a7e = g.pi_e(&tc.vals[1]);
    let integrand = a7e.mul(&a7e).sub(&tc.vals[0].mul(&tc.vals[0]));
    let oracle = integrand.mean().re / (4.0 * tc.mu2) + tc.vals[2].mean().re;
    assert!((dd.mu0 - oracle).abs() <= 1e-10);
}

#[test]
fn phi_round_trip_and_parity() {
    let tc = tc_for("example-i", 0.05, &random_u(6));
    let dd = compute_descent_chain(&tc, &compute_phi(&tc));
    let mut r = common::rng(7);
    let u = common::random_field(&mut r, 12, 1.0, false);
    let band = dd.grid.band() as u32;
    let v = dd.apply_phi(&u, Direction::Forward, band, band).unwrap();
    let (e, o) = v.parity_masses();
    assert!(o <= 1e-12 * e);
    let w = dd.apply_phi(&v, Direction::Inverse, 12, 12).unwrap();
    assert!(w.max_abs_diff(&u) <= 1e-10, "{:e}", w.max_abs_diff(&u));
}

#[test]
fn constants_decay_with_eps() {
    let eps = [0.01, 0.02, 0.03, 0.045];
    let u = random_u(8);
    let (mut m0, mut m2) = (vec![], vec![]);
    for &e in &eps {
        let dd = descend(&tc_for("example-i", e, &u));
        m0.push(dd.mu0.abs());
        m2.push(dd.mu_m2.abs());
    }
    let slope = |v: &[f64]| {
        let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = v.iter().map(|e| e.ln()).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 4.0, y.iter().sum::<f64>() / 4.0);
        x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
    };
    assert!(slope(&m0) >= 2.5, "{m0:?} {}", slope(&m0));
    assert!(slope(&m2) >= 3.5, "{m2:?} {}", slope(&m2));
}

#[test]
fn normal_form_is_close_to_trivial() {
    let dd = descend(&tc_for("example-i", 0.05, &random_u(9)));
    let nf: NormalForm = dd.normal_form();
    assert!(nf.distance_from_trivial() < 0.5);
}
