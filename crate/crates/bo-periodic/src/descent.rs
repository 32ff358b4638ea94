//! Descent: conjugation of
//! `L3 = omega d_tau + mu2 H d_yy + a6 H d_y + a7 d_y + a8 H + a9`
//! by `Phi = sum_{k=0..3} (alpha^(k) + beta^(k) H) d_y^{-k}` to the
//! constant-coefficient operator
//! `D = omega d_tau + mu2 H d_yy + mu1 d_y + mu0 H + mu_{-2} H d_y^{-2}`
//! up to a remainder of order `-3` in `y`.
//!
//! The chain is computed in complex notation, `f^(k) = alpha^(k) + i beta^(k)`,
//! where products follow the rules of complex numbers and `i` stands for `H`
//! only when `Phi` is finally applied: `Phi h = sum Re f^(k) d_y^{-k} h + Im f^(k) H d_y^{-k} h`.
//! Putting `H` to the right of `beta` keeps the calculus exact; the other
//! order differs by a smoothing commutator.

use num_complex::Complex64;
use serde::Serialize;

use crate::diffeo::{Direction, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn, GridSpec};
use crate::spectral::SpectralField;

pub const NEUMANN_TOL: f64 = 1e-12;
pub const NEUMANN_MAX_ITER: usize = 100;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Constant-coefficient normal form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalForm {
    pub omega: f64,
    pub mu2: f64,
    pub mu1: f64,
    pub mu0: f64,
    pub mu_m2: f64,
}

impl NormalForm {
    /// The unperturbed operator `d_t + H d_xx`.
    pub fn trivial() -> Self {
        NormalForm { omega: 1.0, mu2: 1.0, mu1: 0.0, mu0: 0.0, mu_m2: 0.0 }
    }

    /// `lambda_{l,j} / i`.
    pub fn frequency(&self, l: i64, j: i64) -> f64 {
        let (lf, jf) = (l as f64, j as f64);
        let s = jf.signum() * (j != 0) as i32 as f64;
        let tail = if j == 0 { 0.0 } else { self.mu_m2 * s / (jf * jf) };
        self.omega * lf + self.mu2 * jf * jf.abs() + self.mu1 * jf - self.mu0 * s + tail
    }

    pub fn eigenvalue(&self, l: i64, j: i64) -> Complex64 {
        Complex64::new(0.0, self.frequency(l, j))
    }

    /// `|omega - 1| + |mu2 - 1| + |mu1| + |mu0| + |mu_{-2}|`.
    pub fn distance_from_trivial(&self) -> f64 {
        (self.omega - 1.0).abs() + (self.mu2 - 1.0).abs() + self.mu1.abs() + self.mu0.abs() + self.mu_m2.abs()
    }

    pub fn apply(&self, s: &GridSpec) -> GridSpec {
        s.map_symbol(|l, j| self.eigenvalue(l, j))
    }

    pub fn apply_field(&self, u: &SpectralField) -> SpectralField {
        u.map_symbol(|k| self.eigenvalue(k.l as i64, k.j as i64))
    }
}

#[derive(Clone, Debug)]
pub struct DescentData {
    pub grid: Grid,
    pub omega: f64,
    pub mu2: f64,
    pub mu1: f64,
    /// `a76^E = a7 - mu1 + i a6` and `a98 = a9 + i a8` at the nodes.
    pub a76e: GridFn,
    pub a98: GridFn,
    pub phi: GridFn,
    /// `eta^(1), eta^(2), eta^(3)`.
    pub eta: [GridFn; 3],
    /// `g^(0), g^(1), g^(2)`.
    pub g: [GridFn; 3],
    /// `f^(0) = exp(phi)`, `f^(k) = eta^(k) f^(0)`.
    pub f: [GridFn; 4],
    pub c0: Complex64,
    pub c_m2: Complex64,
    pub mu0: f64,
    pub mu_m2: f64,
    pub band: u32,
}

struct Ops<'a> {
    g: &'a Grid,
}

impl Ops<'_> {
    fn dy(&self, f: &GridFn) -> GridFn {
        self.g.dx(f)
    }
    fn dyy(&self, f: &GridFn) -> GridFn {
        self.g.dxx(f)
    }
    fn dtau(&self, f: &GridFn) -> GridFn {
        self.g.dt(f)
    }
    fn dy_inv(&self, f: &GridFn) -> GridFn {
        self.g.dx_inv(f)
    }
    /// `d_tau^{-1} Pi_T`.
    fn dtau_inv_t(&self, f: &GridFn) -> GridFn {
        self.g.dt_inv(&self.g.pi_t(f))
    }
}

/// `phi` with `Pi_C phi = 0`.
pub fn compute_phi(tc: &TransformedCoefficients) -> GridFn {
    let (a76e, a98) = complex_coefficients(tc);
    phi_from(&tc.grid, tc.mu2, tc.omega, &a76e, &a98)
}

fn complex_coefficients(tc: &TransformedCoefficients) -> (GridFn, GridFn) {
    let [a6, a7, a8, a9] = &tc.vals;
    let a76e = a7.zip(a6, |x, y| Complex64::new(x.re - tc.mu1, y.re));
    let a98 = a9.zip(a8, |x, y| Complex64::new(x.re, y.re));
    (a76e, a98)
}

fn phi_from(g: &Grid, mu2: f64, omega: f64, a76e: &GridFn, a98: &GridFn) -> GridFn {
    let o = Ops { g };
    let phi_e = o.dy_inv(a76e).scale(I / (2.0 * mu2));
    let sq = a76e.mul(a76e);
    let phi_t = o
        .dtau_inv_t(&sq)
        .scale(-I / (4.0 * mu2 * omega))
        .sub(&o.dtau_inv_t(a98).scale_re(1.0 / omega));
    phi_e.add(&phi_t)
}

pub fn compute_descent_chain(tc: &TransformedCoefficients, phi: &GridFn) -> DescentData {
    let g = &tc.grid;
    let o = Ops { g };
    let (mu2, mu1, omega) = (tc.mu2, tc.mu1, tc.omega);
    let (a76e, a98) = complex_coefficients(tc);
    let a76 = a76e.add_const(c(mu1));
    let sq = a76e.mul(&a76e);
    let c0 = sq.mean() * (I / (4.0 * mu2)) + a98.mean();

    let phi_y = o.dy(phi);
    let g0 = o
        .dtau(phi)
        .scale_re(omega)
        .add(&phi_y.mul(&phi_y).add(&o.dyy(phi)).scale(I * mu2))
        .add(&a76.mul(&phi_y))
        .add(&a98.add_const(-c0));
    let half = I / (2.0 * mu2);
    let eta1 = o.dy_inv(&g0).scale(half);
    let transport = |eta: &GridFn| {
        o.dtau(eta)
            .scale_re(omega)
            .add(&o.dyy(eta).scale(I * mu2))
            .add(&o.dy(eta).scale_re(mu1))
    };
    let g1 = eta1.mul(&g0).add(&transport(&eta1));
    let eta2e = o.dy_inv(&g1).scale(half);
    let prod = eta2e.mul(&g0);
    let c_m2 = prod.mean();
    let eta2 = eta2e.add(&o.dtau_inv_t(&prod).scale_re(-1.0 / omega));
    let g2 = eta2.mul(&g0).add(&transport(&eta2)).add_const(-c_m2);
    let eta3 = o.dy_inv(&g2).scale(half);

    let f0 = phi.map(|z| z.exp());
    let f = [f0.clone(), eta1.mul(&f0), eta2.mul(&f0), eta3.mul(&f0)];
    DescentData {
        grid: g.clone(),
        omega,
        mu2,
        mu1,
        a76e,
        a98,
        phi: phi.clone(),
        eta: [eta1, eta2, eta3],
        g: [g0, g1, g2],
        f,
        c0,
        c_m2,
        mu0: c0.im,
        mu_m2: c_m2.im,
        band: tc.band,
    }
}

pub fn descend(tc: &TransformedCoefficients) -> DescentData {
    compute_descent_chain(tc, &compute_phi(tc))
}

/// Trace record of one descent.
#[derive(Clone, Debug, Serialize)]
pub struct DescentTrace {
    pub mu0: f64,
    pub mu_m2: f64,
    pub sup_eta1: f64,
    pub sup_eta2: f64,
    pub sup_eta3: f64,
}

impl DescentData {
    pub fn normal_form(&self) -> NormalForm {
        NormalForm { omega: self.omega, mu2: self.mu2, mu1: self.mu1, mu0: self.mu0, mu_m2: self.mu_m2 }
    }

    pub fn trace(&self) -> DescentTrace {
        DescentTrace {
            mu0: self.mu0,
            mu_m2: self.mu_m2,
            sup_eta1: self.eta[0].sup(),
            sup_eta2: self.eta[1].sup(),
            sup_eta3: self.eta[2].sup(),
        }
    }

    /// Real and imaginary parts of a complex nodal function as spectral fields.
    pub fn split(&self, f: &GridFn) -> (SpectralField, SpectralField) {
        let g = &self.grid;
        (g.analyze(&f.re()).to_field(self.band, self.band), g.analyze(&f.im()).to_field(self.band, self.band))
    }

    /// `sup |2 i mu2 phi_y + a76^E|` over the nodes.
    pub fn phi_residual(&self) -> f64 {
        let g = &self.grid;
        self.resolved_sup(&g.dx(&self.phi).scale(2.0 * I * self.mu2).add(&self.a76e))
    }

    fn q(&self, f: &GridFn) -> GridFn {
        self.grid.dx(f).scale(2.0 * I * self.mu2).add(&self.a76e.mul(f))
    }

    fn s(&self, f: &GridFn) -> GridFn {
        let g = &self.grid;
        let a76 = self.a76e.add_const(c(self.mu1));
        g.dt(f)
            .scale_re(self.omega)
            .add(&g.dxx(f).scale(I * self.mu2))
            .add(&a76.mul(&g.dx(f)))
            .add(&self.a98.add_const(-self.c0).mul(f))
    }

    /// `sup |T_1|, sup |T_0|, sup |T_{-1}|, sup |T_{-2}|`.
    pub fn t_residuals(&self) -> [f64; 4] {
        let f = &self.f;
        let t1 = self.q(&f[0]);
        let t0 = self.q(&f[1]).add(&self.s(&f[0]));
        let tm1 = self.q(&f[2]).add(&self.s(&f[1]));
        let tm2 = self.q(&f[3]).add(&self.s(&f[2])).sub(&f[0].scale(self.c_m2));
        [t1, t0, tm1, tm2].map(|t| self.resolved_sup(&t))
    }

    /// Sup of the part of `f` with `|l|, |j| <= band / 2`. The products in the
    /// descent are transcendental, so the top half of the grid spectrum carries
    /// aliasing from the unresolved tail and is left out of residual checks.
    pub fn resolved_sup(&self, f: &GridFn) -> f64 {
        let g = &self.grid;
        let k = (g.band() / 2) as i64;
        let s = g.analyze(f).map_symbol(|l, j| if l.abs() <= k && j.abs() <= k { c(1.0) } else { c(0.0) });
        g.synth(&s).sup()
    }

    /// `sup |Pi_{T+C} g^(k)|` for `k = 0, 1, 2`.
    pub fn solvability_residuals(&self) -> [f64; 3] {
        let g = &self.grid;
        [0, 1, 2].map(|k| self.resolved_sup(&g.x_mean(&self.g[k])))
    }

    /// `Phi h` (without projections) for `h` given by its spectrum.
    pub fn apply_phi_spec(&self, h: &GridSpec) -> GridSpec {
        let g = &self.grid;
        let mut acc = g.zeros();
        let mut hk = h.clone();
        for (k, fk) in self.f.iter().enumerate() {
            if k > 0 {
                hk = hk.map_symbol(|_, j| if j == 0 { c(0.0) } else { Complex64::new(0.0, -1.0 / j as f64) });
            }
            let v = g.synth(&hk);
            let hv = g.hilbert(&v);
            acc = acc.add(&fk.zip(&v, |f, x| f.re * x)).add(&fk.zip(&hv, |f, x| f.im * x));
        }
        g.analyze(&acc)
    }

    /// `Phi~ = Pi_0 Phi Pi_0` or its inverse by Neumann iteration, truncated
    /// to the rectangle `(nt, nx)`.
    pub fn apply_phi(&self, u: &SpectralField, dir: Direction, nt: u32, nx: u32) -> Result<SpectralField> {
        let g = &self.grid;
        let mut s = g.spec_of(u);
        s.data[0] = c(0.0);
        let out = match dir {
            Direction::Forward => {
                let mut r = self.apply_phi_spec(&s);
                r.data[0] = c(0.0);
                r
            }
            Direction::Inverse => {
                let phi0 = |v: &GridSpec| {
                    let mut r = self.apply_phi_spec(v);
                    r.data[0] = c(0.0);
                    r
                };
                neumann_inverse(&s, phi0, "Phi~ inverse")?
            }
        };
        Ok(out.to_field(nt, nx))
    }
}

fn spec_norm(s: &GridSpec) -> f64 {
    s.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `A v = u` for a near-identity `A` by `v <- v + (u - A v)`.
pub fn neumann_inverse<F: Fn(&GridSpec) -> GridSpec>(u: &GridSpec, apply: F, what: &'static str) -> Result<GridSpec> {
    let scale = spec_norm(u);
    if scale == 0.0 {
        return Ok(u.clone());
    }
    let mut v = u.clone();
    let mut last = f64::INFINITY;
    for _ in 0..NEUMANN_MAX_ITER {
        let av = apply(&v);
        let mut r = u.clone();
        for (ri, ai) in r.data.iter_mut().zip(&av.data) {
            *ri -= ai;
        }
        let rn = spec_norm(&r);
        if rn <= NEUMANN_TOL * scale {
            return Ok(v);
        }
        if rn > last {
            return Err(Error::Neumann { what, ratio: rn / last });
        }
        last = rn;
        for (vi, ri) in v.data.iter_mut().zip(&r.data) {
            *vi += ri;
        }
    }
    Err(Error::Neumann { what, ratio: last / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_normal_form_is_the_linear_symbol() {
        let nf = NormalForm::trivial();
        for l in -5..=5 {
            for j in -5..=5 {
                assert_eq!(nf.frequency(l, j), (l + j * j.abs()) as f64);
            }
        }
    }

    #[test]
    fn reflected_eigenvalues_are_conjugate() {
        let nf = NormalForm { omega: 1.01, mu2: 0.98, mu1: 0.03, mu0: 1e-3, mu_m2: 2e-4 };
        for l in -4..=4 {
            for j in -4..=4 {
                assert_eq!(nf.eigenvalue(-l, -j), nf.eigenvalue(l, j).conj());
                assert_eq!(nf.eigenvalue(l, 0), Complex64::new(0.0, 1.01 * l as f64));
            }
        }
    }
}
