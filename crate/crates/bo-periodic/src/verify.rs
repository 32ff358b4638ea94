//! Self-checks run by `bo-periodic verify`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bifurcation::{build_v1, build_v2, validate_mode_set};
use crate::error::Result;
use crate::inversion::{dense_oracle_inverse, invert_l4_truncated};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{brute_force_kernel_products, Multiplier, Parity, Subspace};
use crate::stack::{project_box, Stack};
use crate::{ModeIndex, SpectralField};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64, detail: String) -> Check {
        Check { name: name.into(), pass: value <= limit, value, limit, detail }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub kernel_products: bool,
    pub max_j: u32,
    pub operators: bool,
    pub conjugation: bool,
    pub oracle: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { kernel_products: true, max_j: 10, operators: true, conjugation: true, oracle: true, seed: 7 }
    }
}

/// Random real-valued field in the diamond `n`, even (`X`) or odd (`Y`).
pub fn random_field(rng: &mut ChaCha8Rng, n: i32, odd: bool) -> SpectralField {
    let mut u = SpectralField::zero(n as u32, n as u32);
    for l in -n..=n {
        for j in 0..=n {
            let k = ModeIndex::new(l, j);
            if !k.is_canonical() || k == ModeIndex::ZERO || !k.in_diamond(n as i64) {
                continue;
            }
            let c = rng.random_range(-1.0..1.0) / (1.0 + k.euclid()).powi(2);
            u.set(k, if odd { Complex64::new(0.0, c) } else { Complex64::new(c, 0.0) });
        }
    }
    u
}

/// Products of two or three kernel modes: no counterexample to the pairing rule.
pub fn kernel_products(max_j: u32) -> Check {
    let bad = brute_force_kernel_products(max_j);
    Check {
        name: "kernel products".into(),
        pass: bad.is_empty(),
        value: bad.len() as f64,
        limit: 0.0,
        detail: format!("{} counterexamples for |j_i| <= {max_j}", bad.len()),
    }
}

/// `H^2 = -Pi_E`, `d_x^{-1} d_x = Pi_E`, and `H`, `d_x`, `d_t` swap parity.
pub fn operator_identities(seed: u64, fields: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut parity_ok = true;
    for i in 0..fields {
        let u = random_field(&mut rng, 10, i % 2 == 1);
        let pe = u.project(Subspace::E);
        let hh = u.apply(Multiplier::Hilbert).apply(Multiplier::Hilbert);
        worst = worst.max(hh.max_abs_diff(&pe.scale(-1.0)));
        worst = worst.max(u.apply(Multiplier::Dx).apply(Multiplier::DxInv).max_abs_diff(&pe));
        let want = if i % 2 == 1 { Parity::Even } else { Parity::Odd };
        for m in [Multiplier::Hilbert, Multiplier::Dx, Multiplier::Dt] {
            parity_ok &= u.apply(m).pruned().parity(0.0) == want;
        }
    }
    let mut c = Check::at_most("multiplier identities", worst, 0.0, format!("{fields} fields, parity maps ok: {parity_ok}"));
    c.pass &= parity_ok;
    c
}

fn stack_for(name: &str, eps: f64, a: u32) -> Result<Stack> {
    let data = build_v1(&validate_mode_set(&[2, 3]).expect("valid"), &[1, 1])?;
    let spec = NonlinearitySpec::catalog(name)?;
    let v2 = build_v2(&data, &spec, eps, a)?;
    Stack::build(&spec, &data, &v2, eps, a)
}

/// `L~ Psi~ Phi~ = Psi~ M~ Phi~ L4~` on random fields.
pub fn conjugation(seed: u64) -> Result<Check> {
    let st = stack_for("example-i", 0.05, 10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let h = project_box(&random_field(&mut rng, 10, false), 10);
        worst = worst.max(st.conjugation_defect(&h)?);
    }
    Ok(Check::at_most("conjugation identity", worst, 1e-10, "example-i, eps 0.05, box 10".into()))
}

/// Structured inverse against the dense oracle.
pub fn oracle(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in ["example-i", "ux5"] {
        let st = stack_for(name, 0.05, 10)?;
        let f = project_box(&random_field(&mut rng, 10, true), 10);
        let (h, _) = invert_l4_truncated(&st, &f, 10)?;
        let (ho, _) = dense_oracle_inverse(&st, &f, 10)?;
        let rel = h.distance(&ho) / ho.l2_norm();
        out.push(Check::at_most(&format!("oracle equivalence ({name})"), rel, 1e-8, "eps 0.05, N 10".into()));
    }
    Ok(out)
}

pub fn run(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    if opts.kernel_products {
        out.push(kernel_products(opts.max_j));
    }
    if opts.operators {
        out.push(operator_identities(opts.seed, 100));
    }
    if opts.conjugation {
        out.push(conjugation(opts.seed)?);
    }
    if opts.oracle {
        out.extend(oracle(opts.seed)?);
    }
    Ok(out)
}

pub fn render(checks: &[Check]) -> String {
    let mut s = String::new();
    let w = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{tag}  {:w$}  {:>10.3e} (limit {:.1e})  {}", c.name, c.value, c.limit, c.detail);
    }
    s
}
