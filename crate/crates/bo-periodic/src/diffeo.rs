//! The torus diffeomorphism `psi(t, x) = (t + alpha(t), x + beta(t, x))`.
//!
//! `alpha` and `beta` are chosen so that after `Psi u = u o psi` and division
//! by `1 + Psi^{-1} alpha'` the coefficients of `d_tau` and `H d_yy` become
//! the constants `omega` and `mu2`, and the mean of the `d_y` coefficient is a
//! constant `mu1`. Everything lives on the grid of the linearization, whose
//! coefficients are resolved there without aliasing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{sum_series, Grid, GridFn, GridSpec, Nodes};
use crate::nonlinearity::EvaluatedLinearization;
use crate::spectral::SpectralField;

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 200;
/// `|alpha'|_0 + |beta_x|_0` must stay below this.
pub const CONTRACTION_LIMIT: f64 = 0.5;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug)]
pub struct TorusDiffeo {
    pub grid: Grid,
    /// `alpha(t)` at the nodes (constant along rows).
    pub alpha: GridFn,
    pub beta: GridFn,
    /// Inverse map `(tau, y) -> (tau + alpha~(tau), y + beta~(tau, y))`.
    pub alpha_tilde: GridFn,
    pub beta_tilde: GridFn,
    /// `psi` at the nodes.
    pub forward: Nodes,
    /// `psi^{-1}` at the nodes.
    pub inverse: Nodes,
    pub contraction_bound: f64,
    alpha_spec: GridSpec,
    beta_spec: GridSpec,
}

impl TorusDiffeo {
    pub fn identity(grid: &Grid) -> Self {
        Self::new(grid, &grid.zeros(), &grid.zeros()).expect("identity is a contraction")
    }

    /// Builds `psi` from nodal values of `alpha` and `beta` and inverts it
    /// node by node.
    pub fn new(grid: &Grid, alpha: &GridFn, beta: &GridFn) -> Result<Self> {
        let alpha_spec = grid.analyze(&alpha.re());
        let beta_spec = grid.analyze(&beta.re());
        let da = grid.synth(&alpha_spec.map_symbol(|l, _| Complex64::new(0.0, l as f64))).sup();
        let db = grid.synth(&beta_spec.map_symbol(|_, j| Complex64::new(0.0, j as f64))).sup();
        let contraction_bound = da + db;
        if contraction_bound >= CONTRACTION_LIMIT {
            return Err(Error::Contraction { bound: contraction_bound });
        }
        let forward = Nodes {
            t: (0..grid.gt).map(|a| grid.t_node(a) + alpha.at(a, 0).re).collect(),
            x: (0..grid.len()).map(|i| grid.x_node(i % grid.gx) + beta.data[i].re).collect(),
        };
        let inverse = invert_nodes(grid, &alpha_spec, &beta_spec)?;
        let mut alpha_tilde = grid.zeros();
        let mut beta_tilde = grid.zeros();
        for i in 0..grid.len() {
            let (a, b) = (i / grid.gx, i % grid.gx);
            alpha_tilde.data[i].re = inverse.t[a] - grid.t_node(a);
            beta_tilde.data[i].re = inverse.x[i] - grid.x_node(b);
        }
        Ok(TorusDiffeo {
            grid: grid.clone(),
            alpha: alpha.re(),
            beta: beta.re(),
            alpha_tilde,
            beta_tilde,
            forward,
            inverse,
            contraction_bound,
            alpha_spec,
            beta_spec,
        })
    }

    pub fn alpha_field(&self, band: u32) -> SpectralField {
        self.alpha_spec.to_field(band, 0)
    }

    pub fn beta_field(&self, band: u32) -> SpectralField {
        self.beta_spec.to_field(band, band)
    }

    pub fn alpha_tilde_field(&self, band: u32) -> SpectralField {
        self.grid.analyze(&self.alpha_tilde).to_field(band, 0)
    }

    pub fn beta_tilde_field(&self, band: u32) -> SpectralField {
        self.grid.analyze(&self.beta_tilde).to_field(band, band)
    }

    /// Nodal values of `f o psi` (forward) or `f o psi^{-1}` (inverse), `f`
    /// given by its trigonometric interpolant.
    pub fn compose(&self, f: &GridSpec, dir: Direction) -> GridFn {
        let nodes = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        self.grid.eval_at(f, nodes)
    }

    /// `Psi u` or `Psi^{-1} u`, re-expanded on the grid and truncated to
    /// the rectangle `(nt, nx)`.
    pub fn apply_psi(&self, u: &SpectralField, dir: Direction, nt: u32, nx: u32) -> SpectralField {
        let v = self.compose(&self.grid.spec_of(u), dir);
        self.grid.analyze(&v).to_field(nt, nx)
    }

    /// `max |psi(psi^{-1}(tau, y)) - (tau, y)|` over the nodes.
    pub fn round_trip_defect(&self) -> f64 {
        let g = &self.grid;
        (0..g.gt)
            .into_par_iter()
            .map(|a| {
                let t = self.inverse.t[a];
                let at = alpha_at(&self.alpha_spec, t);
                let mut worst = wrap(t + at - g.t_node(a)).abs();
                let (lmax, jmax) = self.beta_spec.extent(0.0);
                let c = self.beta_spec.row_coefficients(t, lmax, jmax);
                for b in 0..g.gx {
                    let x = self.inverse.x[a * g.gx + b];
                    let y = x + sum_series(&c, jmax, x).re;
                    worst = worst.max(wrap(y - g.x_node(b)).abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn wrap(d: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    d - tau * (d / tau).round()
}

fn alpha_at(alpha: &GridSpec, t: f64) -> f64 {
    let (lmax, _) = alpha.extent(0.0);
    alpha.row_coefficients(t, lmax, 0)[0].re
}

/// Solves `t + alpha(t) = tau`, then `x + beta(t, x) = y`, at every node.
fn invert_nodes(grid: &Grid, alpha: &GridSpec, beta: &GridSpec) -> Result<Nodes> {
    let (lb, jb) = beta.extent(0.0);
    let rows: Vec<Result<(f64, Vec<f64>)>> = (0..grid.gt)
        .into_par_iter()
        .map(|a| {
            let tau = grid.t_node(a);
            let t = fixed_point(tau, |t| alpha_at(alpha, t))?;
            let c = beta.row_coefficients(t, lb, jb);
            let xs = (0..grid.gx)
                .map(|b| fixed_point(grid.x_node(b), |x| sum_series(&c, jb, x).re))
                .collect::<Result<Vec<f64>>>()?;
            Ok((t, xs))
        })
        .collect();
    let mut nodes = Nodes { t: Vec::with_capacity(grid.gt), x: Vec::with_capacity(grid.len()) };
    for r in rows {
        let (t, xs) = r?;
        nodes.t.push(t);
        nodes.x.extend(xs);
    }
    Ok(nodes)
}

/// `z = target - shift(z)` by iteration.
fn fixed_point<F: Fn(f64) -> f64>(target: f64, shift: F) -> Result<f64> {
    let mut z = target;
    let mut defect = f64::INFINITY;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = target - shift(z);
        defect = (next - z).abs();
        z = next;
        if defect <= FIXED_POINT_TOL {
            return Ok(z);
        }
    }
    Err(Error::FixedPoint { defect })
}

/// Constants and coefficients of
/// `L2 = omega d_tau + mu2 H d_yy + a6 H d_y + a7 d_y + a8 H + a9 (+ remainder)`.
#[derive(Clone, Debug)]
pub struct TransformedCoefficients {
    pub mu2: f64,
    pub mu1: f64,
    pub omega: f64,
    pub grid: Grid,
    /// `a6 ... a9` at the nodes, in the variables `(tau, y)`.
    pub vals: [GridFn; 4],
    /// `rho(t)` and `sigma(t)` at the nodes.
    pub rho: GridFn,
    pub sigma: GridFn,
    /// `1 + (Psi^{-1} alpha')(tau)` per row.
    pub m_factor: Vec<f64>,
    pub band: u32,
}

impl TransformedCoefficients {
    /// Coefficient `a_i`, `i` in `6..=9`.
    pub fn a(&self, i: usize) -> SpectralField {
        self.grid.analyze(&self.vals[i - 6]).to_field(self.band, self.band)
    }

    pub fn sup(&self, i: usize) -> f64 {
        self.vals[i - 6].sup()
    }

    /// `max_tau |mean_y a6(tau, .)|`.
    pub fn a6_mean_defect(&self) -> f64 {
        row_means(&self.vals[0]).iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// `max_tau |mean_y a7(tau, .) - mu1|`.
    pub fn a7_mean_defect(&self) -> f64 {
        row_means(&self.vals[1]).iter().map(|m| (m.re - self.mu1).abs()).fold(0.0, f64::max)
    }
}

fn row_means(f: &GridFn) -> Vec<Complex64> {
    (0..f.gt).map(|a| f.row(a).iter().sum::<Complex64>() / f.gx as f64).collect()
}

/// Trace record of one change of variables.
#[derive(Clone, Debug, Serialize)]
pub struct DiffeoTrace {
    pub mu2: f64,
    pub mu1: f64,
    pub sup_alpha: f64,
    pub sup_beta: f64,
    pub contraction_bound: f64,
    pub sup_a6: f64,
    pub sup_a7: f64,
    pub sup_a8: f64,
    pub sup_a9: f64,
}

pub fn trace(d: &TorusDiffeo, tc: &TransformedCoefficients) -> DiffeoTrace {
    DiffeoTrace {
        mu2: tc.mu2,
        mu1: tc.mu1,
        sup_alpha: d.alpha.sup(),
        sup_beta: d.beta.sup(),
        contraction_bound: d.contraction_bound,
        sup_a6: tc.sup(6),
        sup_a7: tc.sup(7),
        sup_a8: tc.sup(8),
        sup_a9: tc.sup(9),
    }
}

/// Intermediate quantities of the construction, exposed for checks.
#[derive(Clone, Debug)]
pub struct DiffeoParts {
    pub p: GridFn,
    pub alpha_prime: GridFn,
    pub beta_x: GridFn,
}

pub fn build_diffeo(lin: &EvaluatedLinearization) -> Result<(TorusDiffeo, TransformedCoefficients)> {
    build_diffeo_parts(lin).map(|(d, tc, _)| (d, tc))
}

pub fn build_diffeo_parts(
    lin: &EvaluatedLinearization,
) -> Result<(TorusDiffeo, TransformedCoefficients, DiffeoParts)> {
    let g = &lin.grid;
    let omega = lin.omega;
    let [a1, a2, a3, a4, a5] = &lin.vals;
    let sup_a1 = a1.sup();
    if sup_a1 >= 1.0 {
        return Err(Error::Domain { sup: sup_a1, limit: 1.0 });
    }
    let re = |z: Complex64| Complex64::new(z.re, 0.0);
    let p = a1.map(|z| Complex64::new((1.0 + z.re).powf(-0.5), 0.0));
    let p_bar = g.x_mean(&p);
    let rho = p_bar.map(|z| re(z.powi(-2)));
    let mu2 = rho.mean().re;
    let pi_t_rho = rho.add_const(Complex64::new(-mu2, 0.0));
    let alpha = g.dt_inv(&pi_t_rho).scale_re(1.0 / mu2).re();
    let alpha_prime = g.dt(&alpha).re();

    let beta_e = g.dx_inv(&g.pi_e(&p)).div(&p_bar).re();
    let beta_x = p.div(&p_bar).add_const(Complex64::new(-1.0, 0.0)).re();
    let beta_e_t = g.dt(&beta_e).re();
    let one_bx = beta_x.add_const(Complex64::new(1.0, 0.0));
    let sigma_density = beta_e_t
        .mul(&one_bx)
        .scale_re(omega)
        .add(&a3.mul(&one_bx).mul(&one_bx));
    let sigma = g.x_mean(&sigma_density).re();
    let mu1 = sigma.mean().re;
    let pi_t_sigma = sigma.add_const(Complex64::new(-mu1, 0.0));
    let gamma = alpha.scale_re(mu1).sub(&g.dt_inv(&pi_t_sigma)).scale_re(1.0 / omega).re();
    let beta = beta_e.add(&gamma);
    let beta_t = g.dt(&beta).re();
    let beta_xx = g.dx(&beta_x).re();
    let one_ap = alpha_prime.add_const(Complex64::new(1.0, 0.0));

    let one_a1 = a1.add_const(Complex64::new(1.0, 0.0));
    let b6 = one_a1.mul(&beta_xx).add(&a2.mul(&one_bx)).div(&one_ap);
    let b7 = beta_t.scale_re(omega).add(&a3.mul(&one_bx)).div(&one_ap);
    let b8 = a4.div(&one_ap);
    let b9 = a5.div(&one_ap);

    let d = TorusDiffeo::new(g, &alpha, &beta)?;
    let pull = |f: &GridFn| d.compose(&g.analyze(f), Direction::Inverse).re();
    let vals = [pull(&b6), pull(&b7), pull(&b8), pull(&b9)];
    let ap_inv = pull(&alpha_prime);
    let m_factor = (0..g.gt).map(|a| 1.0 + ap_inv.at(a, 0).re).collect();
    let tc = TransformedCoefficients {
        mu2,
        mu1,
        omega,
        grid: g.clone(),
        vals,
        rho,
        sigma,
        m_factor,
        band: lin.coef_band,
    };
    Ok((d, tc, DiffeoParts { p, alpha_prime, beta_x }))
}

/// Tolerance on the mean of inputs to `M~`.
pub const MEAN_TOL: f64 = 1e-10;

/// `M~ u = Pi_0 ((1 + Psi^{-1} alpha') u)` and its closed-form inverse
/// `M~^{-1} h = m h - (m / Pi_C m) Pi_C(m h)`, `m = 1 / (1 + Psi^{-1} alpha')`.
/// Results are truncated to the grid band in time.
pub fn apply_m_tilde(tc: &TransformedCoefficients, u: &SpectralField, dir: Direction) -> Result<SpectralField> {
    let mean = u.get(crate::ModeIndex::ZERO).norm();
    if mean > MEAN_TOL * (1.0 + u.l2_norm()) {
        return Err(Error::Validation(format!("M~ acts on zero-mean fields, got mean {mean:.3e}")));
    }
    let g = &tc.grid;
    let v = g.values_of(u);
    let (_, nx) = u.truncation();
    let band = g.band() as u32;
    let out = match dir {
        Direction::Forward => {
            let w = scale_rows(&v, &tc.m_factor);
            let mut s = g.analyze(&w);
            s.data[0] = ZERO;
            s
        }
        Direction::Inverse => {
            let m: Vec<f64> = tc.m_factor.iter().map(|f| 1.0 / f).collect();
            let mh = scale_rows(&v, &m);
            let mean_mh = mh.mean();
            let mean_m = m.iter().sum::<f64>() / m.len() as f64;
            let corr: Vec<f64> = m.iter().map(|mi| mi / mean_m).collect();
            let w = mh.sub(&scale_rows(&g.constant(mean_mh), &corr));
            g.analyze(&w)
        }
    };
    Ok(out.to_field(band, nx))
}

/// Multiplies row `a` by `f[a]`.
pub fn scale_rows(v: &GridFn, f: &[f64]) -> GridFn {
    let mut out = v.clone();
    for (a, fa) in f.iter().enumerate() {
        for z in &mut out.data[a * v.gx..(a + 1) * v.gx] {
            *z *= fa;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip() {
        let g = Grid::new(16, 16);
        let d = TorusDiffeo::identity(&g);
        assert_eq!(d.round_trip_defect(), 0.0);
        assert_eq!(d.alpha_tilde.sup(), 0.0);
        assert_eq!(d.beta_tilde.sup(), 0.0);
    }

    #[test]
    fn fixed_point_reports_failure() {
        assert!(matches!(fixed_point(0.0, |z| -2.0 * z + 1.0), Err(Error::FixedPoint { .. })));
    }
}
