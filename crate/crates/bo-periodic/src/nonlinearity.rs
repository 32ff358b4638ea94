//! Quartic perturbations `N4`, the rescaled map `F(u, eps)` and its
//! linearization.
//!
//! Case (I): `N4(u) = g1(x, u, Hu, u_x) + d_x g2(x, u, Hu_x)`.
//! Case (II): `N4(u) = g0(x, u, Hu, u_x, Hu_xx)`.
//!
//! Every catalog entry is a polynomial in `y` with coefficients in
//! `{1, sin x, cos x}`, so all evaluations are done on grids large enough to
//! be free of aliasing: the results are exact trigonometric polynomials up to
//! rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bifurcation::BifurcationData;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn, GridSpec};
use crate::spectral::{Multiplier, SpectralField};

/// Radius of the ball, inside the unit ball, that the arguments
/// `(U, HU, U_x, HU_x, HU_xx)` must stay in.
pub const DOMAIN_LIMIT: f64 = 0.99;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    Zero,
}

/// Coefficient of a monomial as a function of `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XCoef {
    One,
    Sin,
    Cos,
}

impl XCoef {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            XCoef::One => 1.0,
            XCoef::Sin => x.sin(),
            XCoef::Cos => x.cos(),
        }
    }

    /// `d/dx` as `(factor, coefficient)`.
    fn derivative(self) -> (f64, XCoef) {
        match self {
            XCoef::One => (0.0, XCoef::One),
            XCoef::Sin => (1.0, XCoef::Cos),
            XCoef::Cos => (-1.0, XCoef::Sin),
        }
    }

    fn is_odd(self) -> bool {
        self == XCoef::Sin
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub c: f64,
    pub coef: XCoef,
    pub pows: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.pows.iter().sum()
    }
}

/// `g(x, y) = sum c coef(x) y^pows`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: Vec<Monomial>,
}

impl Poly {
    pub fn new(nvars: usize, terms: &[(f64, XCoef, &[u32])]) -> Self {
        Poly {
            nvars,
            terms: terms
                .iter()
                .map(|(c, coef, pows)| {
                    assert_eq!(pows.len(), nvars);
                    Monomial { c: *c, coef: *coef, pows: pows.to_vec() }
                })
                .collect(),
        }
    }

    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).min().unwrap_or(u32::MAX)
    }

    /// `d g / d y_var`.
    pub fn diff(&self, var: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|m| m.pows[var] > 0)
            .map(|m| {
                let mut pows = m.pows.clone();
                pows[var] -= 1;
                Monomial { c: m.c * m.pows[var] as f64, coef: m.coef, pows }
            })
            .collect();
        Poly { nvars: self.nvars, terms }
    }

    /// Partial derivative in the explicit `x`.
    pub fn diff_x(&self) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|m| {
                let (f, coef) = m.coef.derivative();
                (f != 0.0).then(|| Monomial { c: m.c * f, coef, pows: m.pows.clone() })
            })
            .collect();
        Poly { nvars: self.nvars, terms }
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| m.c * m.coef.eval(x) * m.pows.iter().zip(y).map(|(&p, &v)| v.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Nodal values of `eps^{-s} g(x, eps y)` where `args` hold `y` at the
    /// nodes; each monomial of degree `d` picks up `eps^{d - s}`.
    pub fn eval_scaled(&self, grid: &Grid, args: &[&GridFn], eps: f64, s: i32) -> GridFn {
        let mut out = grid.zeros();
        let xs: Vec<f64> = (0..grid.gx).map(|b| grid.x_node(b)).collect();
        for m in &self.terms {
            let w = m.c * eps.powi(m.degree() as i32 - s);
            for (i, z) in out.data.iter_mut().enumerate() {
                let mut v = w * m.coef.eval(xs[i % grid.gx]);
                for (p, a) in m.pows.iter().zip(args) {
                    if *p > 0 {
                        v *= a.data[i].re.powi(*p as i32);
                    }
                }
                z.re += v;
            }
        }
        out
    }
}

/// A catalog nonlinearity.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec {
    pub name: String,
    pub case: Case,
    /// Case (I): `g1(x, U, HU, U_x)`.
    pub g1: Poly,
    /// Case (I): `g2(x, U, HU_x)`.
    pub g2: Poly,
    /// Case (II): `g0(x, U, HU, U_x, HU_xx)`.
    pub g0: Poly,
}

pub const CATALOG: &[&str] = &["zero", "example-i", "example-ii", "ux5"];

impl NonlinearitySpec {
    pub fn zero() -> Self {
        NonlinearitySpec {
            name: "zero".into(),
            case: Case::Zero,
            g1: Poly::zero(3),
            g2: Poly::zero(2),
            g0: Poly::zero(4),
        }
    }

    /// `(Hu_x)^3 Hu_xx + sin(x) u_x^4 + u u_x^3 + cos(x) u_x^5`.
    pub fn example_i() -> Self {
        NonlinearitySpec {
            name: "example-i".into(),
            case: Case::I,
            g1: Poly::new(
                3,
                &[
                    (1.0, XCoef::Sin, &[0, 0, 4]),
                    (1.0, XCoef::One, &[1, 0, 3]),
                    (1.0, XCoef::Cos, &[0, 0, 5]),
                ],
            ),
            g2: Poly::new(2, &[(0.25, XCoef::One, &[0, 4])]),
            g0: Poly::zero(4),
        }
    }

    /// `sin(x) (Hu_xx)^4 + u_x^5`.
    pub fn example_ii() -> Self {
        NonlinearitySpec {
            name: "example-ii".into(),
            case: Case::II,
            g1: Poly::zero(3),
            g2: Poly::zero(2),
            g0: Poly::new(4, &[(1.0, XCoef::Sin, &[0, 0, 0, 4]), (1.0, XCoef::One, &[0, 0, 5, 0])]),
        }
    }

    /// `u_x^5`, a case (II) instance.
    pub fn ux5() -> Self {
        NonlinearitySpec {
            name: "ux5".into(),
            case: Case::II,
            g1: Poly::zero(3),
            g2: Poly::zero(2),
            g0: Poly::new(4, &[(1.0, XCoef::One, &[0, 0, 5, 0])]),
        }
    }

    pub fn catalog(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "example-i" | "I" | "i" => Ok(Self::example_i()),
            "example-ii" | "II" | "ii" => Ok(Self::example_ii()),
            "ux5" => Ok(Self::ux5()),
            _ => Err(Error::Validation(format!("unknown nonlinearity '{name}', expected one of {CATALOG:?}"))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.case == Case::Zero
    }

    /// Largest total degree of `N = d_x(u^3) + N4`.
    pub fn degree(&self) -> u32 {
        3u32.max(self.g1.max_degree()).max(self.g2.max_degree()).max(self.g0.max_degree())
    }

    /// Space band of the linearized coefficients for fields of band `a`.
    pub fn coef_band(&self, a: u32) -> u32 {
        (self.degree() - 1) * a + 1
    }

    /// Lowest total degree among the monomials of `N4` (`u32::MAX` if none).
    pub fn vanishing_order(&self) -> u32 {
        self.g1.min_degree().min(self.g2.min_degree()).min(self.g0.min_degree())
    }

    /// Checks the reversibility identities of the `g`'s on sample points;
    /// returns the largest defect.
    pub fn reversibility_defect(&self, samples: &[(f64, [f64; 4])]) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, y) in samples {
            let d1 = self.g1.eval(-x, &[y[0], -y[1], -y[2]]) + self.g1.eval(*x, &y[..3]);
            let d2 = self.g2.eval(-x, &y[..2]) - self.g2.eval(*x, &y[..2]);
            let d0 = self.g0.eval(-x, &[y[0], -y[1], -y[2], -y[3]]) + self.g0.eval(*x, y);
            worst = worst.max(d1.abs()).max(d2.abs()).max(d0.abs());
        }
        worst
    }

    /// Whether every `sin` coefficient multiplies an even function of the
    /// sign-flipped arguments, which is what reversibility asks of a
    /// monomial catalog.
    pub fn structurally_reversible(&self) -> bool {
        let odd_flip = |m: &Monomial, flipped: &[usize]| flipped.iter().map(|&v| m.pows[v]).sum::<u32>() % 2 == 1;
        self.g1.terms.iter().all(|m| m.coef.is_odd() != odd_flip(m, &[1, 2]))
            && self.g2.terms.iter().all(|m| !m.coef.is_odd())
            && self.g0.terms.iter().all(|m| m.coef.is_odd() != odd_flip(m, &[1, 2, 3]))
    }

    /// `eps^{-s} N4(eps w)` as an exact trigonometric polynomial.
    pub fn n4_scaled(&self, w: &SpectralField, eps: f64, s: i32) -> Result<SpectralField> {
        let a = band_of(w);
        let band = self.degree() * a + 1;
        let grid = Grid::for_band(band as usize);
        let args = Args::new(&grid, &grid.spec_of(w));
        self.check_domain(&args, eps)?;
        let out = self.n4_on_grid(&grid, &args, eps, s);
        Ok(grid.analyze(&out).to_field(band, band))
    }

    /// The ball constraint only concerns the quartic part; `zero` has none.
    fn check_domain(&self, args: &Args, eps: f64) -> Result<()> {
        if self.is_zero() {
            Ok(())
        } else {
            args.check_domain(eps)
        }
    }

    fn n4_on_grid(&self, grid: &Grid, args: &Args, eps: f64, s: i32) -> GridFn {
        match self.case {
            Case::Zero => grid.zeros(),
            Case::I => {
                let g1 = self.g1.eval_scaled(grid, &[&args.u, &args.hu, &args.ux], eps, s);
                let g2 = self.g2.eval_scaled(grid, &[&args.u, &args.hux], eps, s);
                g1.add(&grid.dx(&g2)).re()
            }
            Case::II => self.g0.eval_scaled(grid, &[&args.u, &args.hu, &args.ux, &args.huxx], eps, s),
        }
    }

    /// `N(u) = d_x(u^3) + N4(u)`.
    pub fn eval_n(&self, u: &SpectralField) -> Result<SpectralField> {
        let a = band_of(u);
        let band = self.degree() * a + 1;
        let grid = Grid::for_band(band as usize);
        let args = Args::new(&grid, &grid.spec_of(u));
        self.check_domain(&args, 1.0)?;
        let cubic = grid.dx(&args.u.map(|z| Complex64::new(z.re.powi(3), 0.0)));
        let out = cubic.add(&self.n4_on_grid(&grid, &args, 1.0, 0)).re();
        Ok(grid.analyze(&out).to_field(band, band))
    }

    /// `calF(U, omega) = omega U_t + H U_xx + N(U)`.
    pub fn eval_raw(&self, u: &SpectralField, omega: f64) -> Result<SpectralField> {
        let lin = u.apply(Multiplier::Dt).scale(omega).axpy(1.0, &u.apply(Multiplier::Hilbert).map_symbol(|k| {
            Complex64::new(-(k.j as f64).powi(2), 0.0)
        }));
        Ok(lin.axpy(1.0, &self.eval_n(u)?))
    }

    /// `F(u, eps) = (eps^{-4} Pi_V + eps^{-2} Pi_W) calF(eps v1 + eps^2 u, 1 + 3 eps^2)`,
    /// evaluated from the expanded form so that no small numbers are divided.
    pub fn eval_f(&self, data: &BifurcationData, u: &SpectralField, eps: f64) -> Result<SpectralField> {
        let a = band_of(u).max(band_of(&data.v1));
        let band = self.degree() * a + 1;
        let grid = Grid::for_band(band as usize);
        let v1 = grid.values_of(&data.v1).re();
        let us = grid.spec_of(u);
        let uv = grid.synth(&us).re();
        // w = v1 + eps u; U = eps w
        let w_spec = grid.analyze(&v1.add(&uv.scale_re(eps)));
        let args = Args::new(&grid, &w_spec);
        self.check_domain(&args, eps)?;
        let w = &args.u;
        let cube_w = grid.analyze(&w.map(|z| Complex64::new(z.re.powi(3), 0.0)));
        let p = v1.zip(&uv, |v, h| {
            let (v, h) = (v.re, h.re);
            Complex64::new(3.0 * v * v * h + 3.0 * eps * v * h * h + eps * eps * h * h * h, 0.0)
        });
        let p_spec = grid.analyze(&p);
        let n4 = grid.analyze(&self.n4_on_grid(&grid, &args, eps, 4));
        let e2 = eps * eps;
        let out = GridSpec {
            gt: grid.gt,
            gx: grid.gx,
            data: vec![ZERO; grid.len()],
        };
        let mut out = out;
        for ai in 0..grid.gt {
            let Some(l) = Grid::signed(ai, grid.gt) else { continue };
            for bi in 0..grid.gx {
                let Some(j) = Grid::signed(bi, grid.gx) else { continue };
                let i = ai * grid.gx + bi;
                let (lf, jf) = (l as f64, j as f64);
                let ik = Complex64::new(0.0, 1.0);
                out.data[i] = if l + j * j.abs() == 0 {
                    ik * 3.0 * lf * us.data[i] + ik * jf * p_spec.data[i] + n4.data[i]
                } else {
                    let sym = (l + j * j.abs()) as f64 + 3.0 * e2 * lf;
                    ik * sym * us.data[i] + ik * jf * eps * cube_w.data[i] + n4.data[i] * e2
                };
            }
        }
        Ok(out.to_field(band, band))
    }

    /// `F` through the raw map, dividing by `eps^4` on `V`; used only as an
    /// independent check of [`Self::eval_f`].
    pub fn eval_f_raw(&self, data: &BifurcationData, u: &SpectralField, eps: f64) -> Result<SpectralField> {
        let big_u = data.v1.scale(eps).axpy(eps * eps, u);
        let raw = self.eval_raw(&big_u, 1.0 + 3.0 * eps * eps)?;
        Ok(raw.apply(Multiplier::ScalingPepsInv(eps)).scale(1.0 / (eps * eps)))
    }

    /// Coefficients `a_1 ... a_5` of `calL(u, eps) = calF'(eps v1 + eps^2 u, omega)`.
    pub fn linearize(&self, data: &BifurcationData, u: &SpectralField, eps: f64) -> Result<EvaluatedLinearization> {
        let a = band_of(u).max(band_of(&data.v1));
        self.linearize_in_box(data, u, eps, a)
    }

    /// As [`Self::linearize`] with the grid sized for fields of band `box_a`.
    pub fn linearize_in_box(
        &self,
        data: &BifurcationData,
        u: &SpectralField,
        eps: f64,
        box_a: u32,
    ) -> Result<EvaluatedLinearization> {
        let box_a = box_a.max(band_of(u)).max(band_of(&data.v1));
        let coef_band = self.coef_band(box_a);
        let grid = Grid::for_band(coef_band as usize);
        let big_u = data.v1.scale(eps).axpy(eps * eps, u);
        let args = Args::new(&grid, &grid.spec_of(&big_u));
        self.check_domain(&args, 1.0)?;
        let three_u2 = args.u.map(|z| Complex64::new(3.0 * z.re * z.re, 0.0));
        let d_three_u2 = grid.dx(&three_u2).re();
        let zero = grid.zeros();
        let [a1, a2, a3, a4, a5] = match self.case {
            Case::Zero => [zero.clone(), zero.clone(), three_u2, zero, d_three_u2],
            Case::I => {
                let g1a = [&args.u, &args.hu, &args.ux];
                let g2a = [&args.u, &args.hux];
                let a1 = self.g2.diff(1).eval_scaled(&grid, &g2a, 1.0, 0);
                let a2 = grid.dx(&a1).re();
                let g2y1 = self.g2.diff(0).eval_scaled(&grid, &g2a, 1.0, 0);
                let a3 = three_u2.add(&self.g1.diff(2).eval_scaled(&grid, &g1a, 1.0, 0)).add(&g2y1);
                let a4 = self.g1.diff(1).eval_scaled(&grid, &g1a, 1.0, 0);
                let a5 = d_three_u2
                    .add(&self.g1.diff(0).eval_scaled(&grid, &g1a, 1.0, 0))
                    .add(&grid.dx(&g2y1).re());
                [a1, a2, a3, a4, a5]
            }
            Case::II => {
                let g0a = [&args.u, &args.hu, &args.ux, &args.huxx];
                let a1 = self.g0.diff(3).eval_scaled(&grid, &g0a, 1.0, 0);
                let a3 = three_u2.add(&self.g0.diff(2).eval_scaled(&grid, &g0a, 1.0, 0));
                let a4 = self.g0.diff(1).eval_scaled(&grid, &g0a, 1.0, 0);
                let a5 = d_three_u2.add(&self.g0.diff(0).eval_scaled(&grid, &g0a, 1.0, 0));
                [a1, zero, a3, a4, a5]
            }
        };
        Ok(EvaluatedLinearization {
            case: self.case,
            eps,
            omega: 1.0 + 3.0 * eps * eps,
            box_a,
            coef_band,
            grid,
            vals: [a1, a2, a3, a4, a5],
        })
    }

    /// `Q(u, h, eps) = F(u + h) - F(u) - F'(u) h`.
    pub fn eval_q(&self, data: &BifurcationData, u: &SpectralField, h: &SpectralField, eps: f64) -> Result<SpectralField> {
        let uh = u.axpy(1.0, h);
        let f1 = self.eval_f(data, &uh, eps)?;
        let f0 = self.eval_f(data, u, eps)?;
        let lin = self.linearize(data, u, eps)?;
        let fp = lin.apply_f_prime(h);
        Ok(f1.axpy(-1.0, &f0).axpy(-1.0, &fp))
    }
}

/// `max(|l|, |j|)` over the truncation rectangle.
pub fn band_of(u: &SpectralField) -> u32 {
    let (nt, nx) = u.truncation();
    nt.max(nx)
}

/// Nodal values of `(U, HU, U_x, HU_x, HU_xx)`.
struct Args {
    u: GridFn,
    hu: GridFn,
    ux: GridFn,
    hux: GridFn,
    huxx: GridFn,
}

impl Args {
    fn new(grid: &Grid, s: &GridSpec) -> Self {
        let at = |f: &dyn Fn(i64) -> Complex64| grid.synth(&s.map_symbol(|_, j| f(j))).re();
        let h = |j: i64| Complex64::new(0.0, -(j.signum() as f64));
        Args {
            u: at(&|_| Complex64::new(1.0, 0.0)),
            hu: at(&|j| h(j)),
            ux: at(&|j| Complex64::new(0.0, j as f64)),
            hux: at(&|j| h(j) * Complex64::new(0.0, j as f64)),
            huxx: at(&|j| h(j) * -(j * j) as f64),
        }
    }

    /// Sup over the five arguments of `eps` times the field.
    fn sup(&self, eps: f64) -> f64 {
        [&self.u, &self.hu, &self.ux, &self.hux, &self.huxx]
            .iter()
            .map(|g| g.sup())
            .fold(0.0, f64::max)
            * eps
    }

    fn check_domain(&self, eps: f64) -> Result<()> {
        let sup = self.sup(eps);
        if sup < DOMAIN_LIMIT {
            Ok(())
        } else {
            Err(Error::Domain { sup, limit: DOMAIN_LIMIT })
        }
    }
}

/// Coefficients of
/// `calL h = omega h_t + (1 + a1) H h_xx + a2 H h_x + a3 h_x + a4 H h + a5 h`
/// as nodal values on a grid that resolves them exactly.
#[derive(Clone, Debug)]
pub struct EvaluatedLinearization {
    pub case: Case,
    pub eps: f64,
    pub omega: f64,
    /// Band of the fields the linearization was built for.
    pub box_a: u32,
    /// Band of the coefficients.
    pub coef_band: u32,
    pub grid: Grid,
    pub vals: [GridFn; 5],
}

impl EvaluatedLinearization {
    /// Coefficient `a_{i}`, `i` in `1..=5`, as a spectral field.
    pub fn a(&self, i: usize) -> SpectralField {
        self.grid.analyze(&self.vals[i - 1]).to_field(self.coef_band, self.coef_band)
    }

    pub fn sup(&self, i: usize) -> f64 {
        self.vals[i - 1].sup()
    }

    /// Variable-coefficient part of `calL h` as nodal values on `grid`,
    /// given the coefficients on that grid.
    pub fn variable_part(grid: &Grid, coefs: &[GridFn; 5], h: &GridSpec) -> GridFn {
        let ik = |j: i64| Complex64::new(0.0, j as f64);
        let hs = |j: i64| Complex64::new(0.0, -(j.signum() as f64));
        let hxx = grid.synth(&h.map_symbol(|_, j| hs(j) * -(j * j) as f64));
        let hx_h = grid.synth(&h.map_symbol(|_, j| hs(j) * ik(j)));
        let hx = grid.synth(&h.map_symbol(|_, j| ik(j)));
        let hh = grid.synth(&h.map_symbol(|_, j| hs(j)));
        let h0 = grid.synth(h);
        let mut out = grid.zeros();
        for i in 0..grid.len() {
            out.data[i] = coefs[0].data[i] * hxx.data[i]
                + coefs[1].data[i] * hx_h.data[i]
                + coefs[2].data[i] * hx.data[i]
                + coefs[3].data[i] * hh.data[i]
                + coefs[4].data[i] * h0.data[i];
        }
        out
    }

    /// Coefficients resampled on another grid that resolves them.
    pub fn coefs_on(&self, grid: &Grid) -> [GridFn; 5] {
        if grid.gt == self.grid.gt && grid.gx == self.grid.gx {
            return self.vals.clone();
        }
        let f = |g: &GridFn| grid.values_of(&self.grid.analyze(g).to_field(self.coef_band, self.coef_band)).re();
        [f(&self.vals[0]), f(&self.vals[1]), f(&self.vals[2]), f(&self.vals[3]), f(&self.vals[4])]
    }

    /// Spectrum of `calL h` (or `P_eps^{-1} calL h` when `scaled`) on a grid
    /// resolving the full product.
    fn apply_impl(&self, h: &SpectralField, scaled: bool) -> SpectralField {
        let band = self.coef_band + band_of(h);
        let grid = Grid::for_band(band as usize);
        let coefs = self.coefs_on(&grid);
        let hs = grid.spec_of(h);
        let var = grid.analyze(&Self::variable_part(&grid, &coefs, &hs));
        let e2 = self.eps * self.eps;
        let full = GridSpec {
            gt: grid.gt,
            gx: grid.gx,
            data: (0..grid.len())
                .map(|i| {
                    let (ai, bi) = (i / grid.gx, i % grid.gx);
                    let (Some(l), Some(j)) = (Grid::signed(ai, grid.gt), Grid::signed(bi, grid.gx)) else {
                        return ZERO;
                    };
                    let lin = Complex64::new(0.0, (l + j * j.abs()) as f64 + 3.0 * e2 * l as f64) * hs.data[i];
                    if scaled && l + j * j.abs() == 0 {
                        Complex64::new(0.0, 3.0 * l as f64) * hs.data[i] + var.data[i] / e2
                    } else {
                        lin + var.data[i]
                    }
                })
                .collect(),
        };
        full.to_field(band, band)
    }

    /// `calL h`, exact.
    pub fn apply(&self, h: &SpectralField) -> SpectralField {
        self.apply_impl(h, false)
    }

    /// `F'(u) h = P_eps^{-1} calL h`, exact.
    pub fn apply_f_prime(&self, h: &SpectralField) -> SpectralField {
        self.apply_impl(h, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModeIndex;

    #[test]
    fn catalog_is_reversible_and_quartic() {
        let samples: Vec<(f64, [f64; 4])> = (0..20)
            .map(|i| {
                let s = i as f64 * 0.37;
                (s, [0.3 * s.sin(), 0.2 * s.cos(), -0.1 * s, 0.25 * (2.0 * s).sin()])
            })
            .collect();
        for name in CATALOG {
            let spec = NonlinearitySpec::catalog(name).unwrap();
            assert!(spec.reversibility_defect(&samples) < 1e-15, "{name}");
            assert!(spec.structurally_reversible(), "{name}");
            assert!(spec.vanishing_order() >= 4, "{name}");
        }
    }

    #[test]
    fn zero_spec_is_cubic_convolution() {
        let u = SpectralField::mode(ModeIndex::new(-1, 1), Complex64::new(0.5, 0.0), 1, 1);
        let n = NonlinearitySpec::zero().eval_n(&u).unwrap();
        let oracle = u.product(&u).unwrap().product(&u).unwrap().apply(Multiplier::Dx);
        assert!(n.max_abs_diff(&oracle) < 1e-14);
    }
}
