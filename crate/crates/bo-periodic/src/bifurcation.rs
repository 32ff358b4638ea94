//! Multimodal bifurcation from the kernel `V` of `L = d_t + d_xx H`.
//!
//! With `q_j = e^{i(-j|j| t + j x)}` and `v = sum_{j in +-K} a_j q_j`, the
//! unperturbed bifurcation equation `3 v_t + Pi_V d_x(v^3) = 0` reduces to the
//! linear system `M rho = k` with `rho_i = a_{k_i}^2`, `M = 2 - I`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{ModeIndex, Multiplier, SpectralField, Subspace};

/// Validated set `k_1 < ... < k_m` of positive space frequencies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSet {
    ks: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSetRejection {
    Empty,
    NotStrictlyIncreasing,
    NonPositive,
    /// `k_1 + ... + k_{m-1} > k_m (m - 3/2)` fails.
    Existence,
    /// `(k_1 + ... + k_m) / (m - 1/2)` is a positive integer.
    NonDegeneracy { value: i64 },
}

impl fmt::Display for ModeSetRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSetRejection::Empty => write!(f, "empty mode set"),
            ModeSetRejection::NotStrictlyIncreasing => write!(f, "modes must be strictly increasing"),
            ModeSetRejection::NonPositive => write!(f, "modes must be positive"),
            ModeSetRejection::Existence => {
                write!(f, "existence condition fails: k_1 + ... + k_(m-1) <= k_m (m - 3/2)")
            }
            ModeSetRejection::NonDegeneracy { value } => {
                write!(f, "degenerate: (k_1 + ... + k_m)/(m - 1/2) = {value} is an integer")
            }
        }
    }
}

impl ModeSet {
    pub fn ks(&self) -> &[u32] {
        &self.ks
    }

    pub fn m(&self) -> usize {
        self.ks.len()
    }

    pub fn k_max(&self) -> u32 {
        *self.ks.last().expect("validated sets are nonempty")
    }

    /// `b = 2 (k_1 + ... + k_m) / (2m - 1)`.
    pub fn b(&self) -> Rational64 {
        let s: i64 = self.ks.iter().map(|&k| k as i64).sum();
        Rational64::new(2 * s, 2 * self.m() as i64 - 1)
    }

    /// Smallest diamond containing the support of `v1`: `k_m^2 + k_m`.
    pub fn min_box(&self) -> u32 {
        let k = self.k_max();
        k * k + k
    }
}

pub fn validate_mode_set(ks: &[i64]) -> std::result::Result<ModeSet, ModeSetRejection> {
    if ks.is_empty() {
        return Err(ModeSetRejection::Empty);
    }
    if ks.iter().any(|&k| k <= 0) {
        return Err(ModeSetRejection::NonPositive);
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ModeSetRejection::NotStrictlyIncreasing);
    }
    let m = ks.len() as i64;
    let km = ks[ks.len() - 1];
    let head: i64 = ks[..ks.len() - 1].iter().sum();
    if 2 * head <= km * (2 * m - 3) {
        return Err(ModeSetRejection::Existence);
    }
    let s: i64 = ks.iter().sum();
    if (2 * s) % (2 * m - 1) == 0 {
        return Err(ModeSetRejection::NonDegeneracy { value: 2 * s / (2 * m - 1) });
    }
    Ok(ModeSet { ks: ks.iter().map(|&k| k as u32).collect() })
}

/// `rho_i = b - k_i`, exact.
pub fn amplitudes(modes: &ModeSet) -> Vec<Rational64> {
    let b = modes.b();
    modes.ks.iter().map(|&k| b - Rational64::from_integer(k as i64)).collect()
}

/// `M rho` with `M` = 1 on the diagonal and 2 elsewhere.
pub fn apply_m(rho: &[Rational64]) -> Vec<Rational64> {
    let total: Rational64 = rho.iter().copied().sum();
    rho.iter().map(|&r| total * 2 - r).collect()
}

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Kernel solution and the constants entering its linearization.
#[derive(Clone, Debug)]
pub struct BifurcationData {
    pub modes: ModeSet,
    pub rho: Vec<Rational64>,
    pub signs: Vec<i8>,
    /// `a_{k_i} = s_i sqrt(rho_i)`.
    pub a: Vec<f64>,
    pub b: Rational64,
    pub delta: f64,
    /// `sum_{j in +-K} a_j q_j`, in `X cap V_0`.
    pub v1: SpectralField,
}

impl BifurcationData {
    pub fn b_f64(&self) -> f64 {
        to_f64(self.b)
    }

    pub fn rho_f64(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| to_f64(r)).collect()
    }

    /// Coefficient of `v1` at `q_j`.
    pub fn a_of(&self, j: i32) -> f64 {
        self.modes
            .ks
            .iter()
            .position(|&k| k as i32 == j.abs())
            .map(|i| self.a[i])
            .unwrap_or(0.0)
    }
}

/// `inf_{j != 0} |b - |j|| / |j|`. For `|j| > 2b` the ratio is `1 - b/|j|`,
/// increasing in `|j|`, so the window `1 <= |j| <= ceil(2b) + 1` is exact.
pub fn non_degeneracy_margin(b: Rational64) -> f64 {
    let top = (b * 2).ceil().to_integer().max(1) + 1;
    (1..=top).map(|j| to_f64(abs_ratio(b - j) / j)).fold(f64::INFINITY, f64::min)
}

pub fn build_v1(modes: &ModeSet, signs: &[i8]) -> Result<BifurcationData> {
    if signs.len() != modes.m() {
        return Err(Error::Validation(format!("expected {} signs, got {}", modes.m(), signs.len())));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Validation("signs must be +1 or -1".into()));
    }
    let rho = amplitudes(modes);
    let a: Vec<f64> = rho.iter().zip(signs).map(|(&r, &s)| s as f64 * to_f64(r).sqrt()).collect();
    let km = modes.k_max();
    let mut v1 = SpectralField::zero(km * km, km);
    for (&k, &ak) in modes.ks.iter().zip(&a) {
        v1.set(ModeIndex::kernel(k as i32), Complex64::new(ak, 0.0));
    }
    let b = modes.b();
    Ok(BifurcationData { modes: modes.clone(), rho, signs: signs.to_vec(), a, b, delta: non_degeneracy_margin(b), v1 })
}

/// `3 v_t + Pi_V d_x(v^3)`.
pub fn bifurcation_residual(v: &SpectralField) -> Result<SpectralField> {
    let v3 = v.product(v)?.product(v)?;
    let nl = v3.apply(Multiplier::Dx).project(Subspace::V);
    Ok(v.apply(Multiplier::Dt).scale(3.0).axpy(1.0, &nl))
}

/// Forward operator `A h = 3 h_t + Pi_V d_x(3 v1^2 h)`.
pub fn apply_bif_operator(data: &BifurcationData, h: &SpectralField) -> Result<SpectralField> {
    let v2 = data.v1.product(&data.v1)?;
    let nl = v2.product(h)?.scale(3.0).apply(Multiplier::Dx).project(Subspace::V);
    Ok(h.apply(Multiplier::Dt).scale(3.0).axpy(1.0, &nl))
}

/// Tolerance on the components of the right-hand side outside `V_0 cap Y`.
pub const RHS_TOL: f64 = 1e-9;

/// Solves `A h = f` for `h in V_0 cap X` given `f in V_0 cap Y`.
pub fn solve_linearized_bif(data: &BifurcationData, f: &SpectralField) -> Result<SpectralField> {
    let scale = 1.0 + f.l2_norm();
    let off_v = f.project(Subspace::W).l2_norm() + f.get(ModeIndex::ZERO).norm();
    let off_y = f.project(Subspace::X).l2_norm();
    if off_v > RHS_TOL * scale || off_y > RHS_TOL * scale {
        return Err(Error::Validation(format!(
            "right-hand side leaves V_0 cap Y: |Pi_W f + Pi_C f| = {off_v:.3e}, |Re f| = {off_y:.3e}"
        )));
    }
    let b = data.b_f64();
    let (nt, nx) = f.truncation();
    let mut h = SpectralField::zero(nt, nx);
    let m = data.modes.m();
    let mut y = DVector::<f64>::zeros(m);
    for (k, c) in f.iter_canonical() {
        if k == ModeIndex::ZERO || !k.in_kernel() {
            continue;
        }
        let j = k.j;
        match data.modes.ks.iter().position(|&kk| kk as i32 == j) {
            Some(i) => y[i] = c.im / (6.0 * j as f64 * data.a[i]),
            None => {
                let jf = j as f64;
                h.set(k, Complex64::new(c.im / (3.0 * jf * (b - jf)), 0.0));
            }
        }
    }
    let mm = DMatrix::from_fn(m, m, |r, c| if r == c { 1.0 } else { 2.0 });
    let z = mm.lu().solve(&y).ok_or(Error::Singular { sigma_min: 0.0 })?;
    for (i, &k) in data.modes.ks.iter().enumerate() {
        let hk = z[i] / data.a[i];
        if hk != 0.0 {
            h.set(ModeIndex::kernel(k as i32), Complex64::new(hk, 0.0));
        }
    }
    Ok(h)
}

/// `v2(eps)`: solution of `A v2 = -Pi_V eps^{-4} N4(eps v1)` on the kernel
/// modes of the diamond `|l| + |j| <= ambient`.
pub fn build_v2(data: &BifurcationData, spec: &NonlinearitySpec, eps: f64, ambient: u32) -> Result<SpectralField> {
    if spec.is_zero() {
        return Ok(SpectralField::zero(data.v1.truncation().0, data.v1.truncation().1));
    }
    let n4 = spec.n4_scaled(&data.v1, eps, 4)?;
    let rhs = n4
        .project(Subspace::V0)
        .project(Subspace::FourierBox(ambient as i64))
        .scale(-1.0)
        .project(Subspace::Y);
    let (nt, nx) = diamond_rect(ambient);
    solve_linearized_bif(data, &rhs.with_truncation(nt, nx))
}

/// Rectangle enclosing the diamond of radius `n`.
pub fn diamond_rect(n: u32) -> (u32, u32) {
    (n, n)
}

fn abs_ratio(r: Rational64) -> Rational64 {
    if r < Rational64::from_integer(0) {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn smallest_example() {
        let ms = validate_mode_set(&[2, 3]).unwrap();
        assert_eq!(amplitudes(&ms), vec![r(4, 3), r(1, 3)]);
        assert_eq!(ms.b(), r(10, 3));
        assert_eq!(apply_m(&amplitudes(&ms)), vec![r(2, 1), r(3, 1)]);
        let d = build_v1(&ms, &[1, 1]).unwrap();
        assert!((d.delta - 1.0 / 9.0).abs() < 1e-15);
        let theorem: Vec<Rational64> = amplitudes(&ms).iter().map(|&x| x * 4).collect();
        assert_eq!(theorem, vec![r(16, 3), r(4, 3)]);
    }

    #[test]
    fn rejections() {
        assert_eq!(validate_mode_set(&[5]), Err(ModeSetRejection::NonDegeneracy { value: 10 }));
        assert_eq!(validate_mode_set(&[1, 5]), Err(ModeSetRejection::Existence));
        assert_eq!(validate_mode_set(&[]), Err(ModeSetRejection::Empty));
        assert_eq!(validate_mode_set(&[3, 2]), Err(ModeSetRejection::NotStrictlyIncreasing));
    }

    #[test]
    fn residual_vanishes_for_all_signs() {
        let ms = validate_mode_set(&[2, 3]).unwrap();
        for signs in [[1, 1], [1, -1], [-1, 1], [-1, -1]] {
            let d = build_v1(&ms, &signs).unwrap();
            assert!(bifurcation_residual(&d.v1).unwrap().l2_norm() <= 1e-12);
        }
        let d = build_v1(&ms, &[1, 1]).unwrap();
        let b = d.v1.product(&d.v1).unwrap().get(ModeIndex::ZERO).re;
        assert!((b - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let ms = validate_mode_set(&[2, 3]).unwrap();
        let d = build_v1(&ms, &[1, 1]).unwrap();
        let h = solve_linearized_bif(&d, &SpectralField::zero(30, 5)).unwrap();
        assert_eq!(h.l2_norm(), 0.0);
    }
}
