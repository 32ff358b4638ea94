//! The conjugated linearized operator `L4 = Phi^{-1} M^{-1} Psi^{-1} L Psi Phi`
//! on the zero-mean trigonometric polynomials of an ambient diamond
//! `|l| + |j| <= A`.
//!
//! Every factor is compressed to the ambient space, `X~_A = Pi_A Pi_0 X`, and
//! the inverses are the exact inverses of the compressions (defect correction
//! preconditioned by the continuous inverse). The conjugation identity
//! `L Psi Phi = Psi M Phi L4` therefore holds on the ambient space to
//! rounding, which is what the Nash-Moser residual identities need.

use num_complex::Complex64;

use crate::bifurcation::BifurcationData;
use crate::descent::{descend, DescentData, NormalForm};
use crate::diffeo::{build_diffeo, scale_rows, Direction, TorusDiffeo, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::nonlinearity::{EvaluatedLinearization, NonlinearitySpec};
use crate::spectral::{ModeIndex, SpectralField};

pub const SOLVE_TOL: f64 = 1e-13;
pub const SOLVE_MAX_ITER: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `l + j|j| = 0`.
pub fn in_kernel(k: ModeIndex) -> bool {
    let (l, j) = (k.l as i64, k.j as i64);
    l + j * j.abs() == 0
}

/// `Pi_N Pi_0` onto the diamond `|l| + |j| <= n`.
pub fn project_box(u: &SpectralField, n: u32) -> SpectralField {
    let mut out = SpectralField::zero(n, n);
    for (k, c) in u.iter_canonical() {
        if k != ModeIndex::ZERO && k.in_diamond(n as i64) {
            out.set(k, c);
        }
    }
    out
}

fn from_spec(s: &GridSpec, n: u32) -> SpectralField {
    let mut u = s.to_field_diamond(n);
    u.set(ModeIndex::ZERO, ZERO);
    u
}

/// Solves `A v = u` by `v <- v + P (u - A v)`, starting from `v = P u`.
pub fn defect_correction<A, P>(u: &SpectralField, apply: A, precond: P, what: &'static str) -> Result<SpectralField>
where
    A: Fn(&SpectralField) -> SpectralField,
    P: Fn(&SpectralField) -> SpectralField,
{
    let scale = u.l2_norm();
    if scale == 0.0 {
        return Ok(u.clone());
    }
    let mut v = precond(u);
    let mut last = f64::INFINITY;
    for _ in 0..SOLVE_MAX_ITER {
        let r = u.axpy(-1.0, &apply(&v));
        let rn = r.l2_norm();
        if rn <= SOLVE_TOL * scale {
            return Ok(v);
        }
        if rn > last {
            return Err(Error::Neumann { what, ratio: rn / last });
        }
        last = rn;
        v = v.axpy(1.0, &precond(&r));
    }
    Err(Error::Neumann { what, ratio: last / scale })
}

/// Which factor of the conjugation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Psi,
    M,
    Phi,
}

/// The full conjugation data at one `(u, eps)` on the ambient diamond.
#[derive(Clone, Debug)]
pub struct Stack {
    pub box_a: u32,
    pub eps: f64,
    pub lin: EvaluatedLinearization,
    pub diffeo: TorusDiffeo,
    pub tc: TransformedCoefficients,
    pub descent: DescentData,
    pub nf: NormalForm,
}

impl Stack {
    /// Builds the stack for `U = eps v1 + eps^2 u`.
    pub fn build(spec: &NonlinearitySpec, data: &BifurcationData, u: &SpectralField, eps: f64, box_a: u32) -> Result<Self> {
        let lin = spec.linearize_in_box(data, u, eps, box_a)?;
        Self::from_linearization(lin, box_a)
    }

    pub fn from_linearization(lin: EvaluatedLinearization, box_a: u32) -> Result<Self> {
        let (diffeo, tc) = build_diffeo(&lin)?;
        let descent = descend(&tc);
        let nf = descent.normal_form();
        Ok(Stack { box_a, eps: lin.eps, lin, diffeo, tc, descent, nf })
    }

    fn grid(&self) -> &Grid {
        &self.lin.grid
    }

    fn out(&self, s: &GridSpec) -> SpectralField {
        from_spec(s, self.box_a)
    }

    /// `L~ h = Pi_A Pi_0 calL h`.
    pub fn l_tilde(&self, h: &SpectralField) -> SpectralField {
        galerkin_l(&self.lin, h, self.box_a, false)
    }

    /// `Pi_A F'(u) h`, with the kernel rows divided by `eps^2` analytically.
    pub fn f_prime(&self, h: &SpectralField) -> SpectralField {
        galerkin_l(&self.lin, h, self.box_a, true)
    }

    fn psi_raw(&self, h: &SpectralField, dir: Direction) -> SpectralField {
        let g = self.grid();
        self.out(&g.analyze(&self.diffeo.compose(&g.spec_of(h), dir)))
    }

    fn m_raw(&self, h: &SpectralField, dir: Direction) -> SpectralField {
        let g = self.grid();
        let v = g.values_of(h);
        let s = match dir {
            Direction::Forward => g.analyze(&scale_rows(&v, &self.tc.m_factor)),
            Direction::Inverse => {
                let m: Vec<f64> = self.tc.m_factor.iter().map(|f| 1.0 / f).collect();
                let mh = scale_rows(&v, &m);
                let mean_mh = mh.mean();
                let mean_m = m.iter().sum::<f64>() / m.len() as f64;
                let corr: Vec<f64> = m.iter().map(|mi| mi / mean_m).collect();
                g.analyze(&mh.sub(&scale_rows(&g.constant(mean_mh), &corr)))
            }
        };
        self.out(&s)
    }

    fn phi_raw(&self, h: &SpectralField) -> SpectralField {
        let g = self.grid();
        self.out(&self.descent.apply_phi_spec(&g.spec_of(h)))
    }

    /// Compressed factor or the exact inverse of the compression.
    pub fn factor(&self, f: Factor, h: &SpectralField, dir: Direction) -> Result<SpectralField> {
        let h = project_box(h, self.box_a);
        match (f, dir) {
            (Factor::Psi, Direction::Forward) => Ok(self.psi_raw(&h, Direction::Forward)),
            (Factor::Psi, Direction::Inverse) => defect_correction(
                &h,
                |v| self.psi_raw(v, Direction::Forward),
                |r| self.psi_raw(r, Direction::Inverse),
                "Psi~ inverse",
            ),
            (Factor::M, Direction::Forward) => Ok(self.m_raw(&h, Direction::Forward)),
            (Factor::M, Direction::Inverse) => defect_correction(
                &h,
                |v| self.m_raw(v, Direction::Forward),
                |r| self.m_raw(r, Direction::Inverse),
                "M~ inverse",
            ),
            (Factor::Phi, Direction::Forward) => Ok(self.phi_raw(&h)),
            (Factor::Phi, Direction::Inverse) => {
                defect_correction(&h, |v| self.phi_raw(v), |r| r.clone(), "Phi~ inverse")
            }
        }
    }

    /// `Psi~ Phi~ h`.
    pub fn psi_phi(&self, h: &SpectralField) -> Result<SpectralField> {
        let v = self.factor(Factor::Phi, h, Direction::Forward)?;
        self.factor(Factor::Psi, &v, Direction::Forward)
    }

    /// `Phi~^{-1} Psi~^{-1} h`.
    pub fn psi_phi_inv(&self, h: &SpectralField) -> Result<SpectralField> {
        let v = self.factor(Factor::Psi, h, Direction::Inverse)?;
        self.factor(Factor::Phi, &v, Direction::Inverse)
    }

    /// `Psi~ M~ Phi~ h`.
    pub fn psi_m_phi(&self, h: &SpectralField) -> Result<SpectralField> {
        let v = self.factor(Factor::Phi, h, Direction::Forward)?;
        let v = self.factor(Factor::M, &v, Direction::Forward)?;
        self.factor(Factor::Psi, &v, Direction::Forward)
    }

    /// `Phi~^{-1} M~^{-1} Psi~^{-1} h`.
    pub fn psi_m_phi_inv(&self, h: &SpectralField) -> Result<SpectralField> {
        let v = self.factor(Factor::Psi, h, Direction::Inverse)?;
        let v = self.factor(Factor::M, &v, Direction::Inverse)?;
        self.factor(Factor::Phi, &v, Direction::Inverse)
    }

    /// `L4~ h`.
    pub fn l4(&self, h: &SpectralField) -> Result<SpectralField> {
        let v = self.psi_phi(h)?;
        let v = self.l_tilde(&v);
        self.psi_m_phi_inv(&v)
    }

    /// `D h` on the ambient diamond.
    pub fn d(&self, h: &SpectralField) -> SpectralField {
        project_box(&self.nf.apply_field(h), self.box_a)
    }

    /// `R h = L4~ h - D h`.
    pub fn residual_r(&self, h: &SpectralField) -> Result<SpectralField> {
        Ok(self.l4(h)?.axpy(-1.0, &self.d(h)))
    }

    /// `max |L Psi Phi h - Psi M Phi L4 h|` relative to `|L Psi Phi h|`.
    pub fn conjugation_defect(&self, h: &SpectralField) -> Result<f64> {
        let lhs = self.l_tilde(&self.psi_phi(h)?);
        let rhs = self.psi_m_phi(&self.l4(h)?)?;
        Ok(lhs.distance(&rhs) / lhs.l2_norm().max(f64::MIN_POSITIVE))
    }
}

/// `Pi_A Pi_0 calL h`, or `Pi_A P_eps^{-1} calL h` when `scaled`, on the
/// coefficient grid of `lin` (exact on the diamond `A` when the grid
/// resolves products of the coefficients with fields of band `A`).
pub fn galerkin_l(lin: &EvaluatedLinearization, h: &SpectralField, box_a: u32, scaled: bool) -> SpectralField {
    let g = &lin.grid;
    let hs = g.spec_of(h);
    let var = g.analyze(&EvaluatedLinearization::variable_part(g, &lin.vals, &hs));
    let e2 = lin.eps * lin.eps;
    let mut out = SpectralField::zero(box_a, box_a);
    for k in diamond_modes(box_a) {
        let (l, j) = (k.l as i64, k.j as i64);
        let hk = hs.get(l, j);
        let vk = var.get(l, j);
        let v = if scaled && in_kernel(k) {
            Complex64::new(0.0, 3.0 * l as f64) * hk + vk / e2
        } else {
            Complex64::new(0.0, (l + j * j.abs()) as f64 + 3.0 * e2 * l as f64) * hk + vk
        };
        out.set(k, v);
    }
    out
}

/// Real basis field of `X` at the canonical mode `k`: `u_k = u_{-k} = 1`.
pub fn x_basis(k: ModeIndex, n: u32) -> SpectralField {
    SpectralField::mode(k, Complex64::new(1.0, 0.0), n, n)
}

/// Canonical nonzero modes of the diamond `|l| + |j| <= n` in index order.
pub fn diamond_modes(n: u32) -> Vec<ModeIndex> {
    let n = n as i32;
    let mut out = Vec::new();
    for l in -n..=n {
        for j in 0..=n - l.abs() {
            let k = ModeIndex::new(l, j);
            if k.is_canonical() && k != ModeIndex::ZERO {
                out.push(k);
            }
        }
    }
    out
}

/// Canonical kernel modes `l = -j|j|`, `j > 0`, in the diamond `n`.
pub fn kernel_modes(n: u32) -> Vec<ModeIndex> {
    diamond_modes(n).into_iter().filter(|&k| in_kernel(k)).collect()
}

/// Field in `X` with real coefficients `x` on `modes`.
pub fn x_field(modes: &[ModeIndex], x: &[f64], n: u32) -> SpectralField {
    SpectralField::from_modes(modes.iter().zip(x).map(|(&k, &c)| (k, Complex64::new(c, 0.0))), n, n)
}

/// Imaginary parts of the coefficients on `modes` (coordinates of a `Y` field).
pub fn y_coords(u: &SpectralField, modes: &[ModeIndex]) -> Vec<f64> {
    modes.iter().map(|&k| u.get(k).im).collect()
}

/// Real parts of the coefficients on `modes` (coordinates of an `X` field).
pub fn x_coords(u: &SpectralField, modes: &[ModeIndex]) -> Vec<f64> {
    modes.iter().map(|&k| u.get(k).re).collect()
}
