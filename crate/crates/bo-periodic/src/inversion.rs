//! Diophantine check and the inverse of `Pi_N L4 Pi_N` by Lyapunov-Schmidt
//! splitting into the kernel modes `V` (`l + j|j| = 0`) and the rest `W`.
//!
//! Fields in `X` are coordinatized by the real parts of their canonical
//! coefficients, fields in `Y` by the imaginary parts; the operator maps
//! `X_0 -> Y`, so all matrices below are real.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::descent::NormalForm;
use crate::error::{Error, Result};
use crate::spectral::{ModeIndex, SpectralField};
use crate::stack::{diamond_modes, in_kernel, kernel_modes, project_box, x_basis, x_field, y_coords, Stack};

pub const NEUMANN_TOL: f64 = 1e-12;
pub const NEUMANN_MAX_ITER: usize = 100;
/// Krylov dimension of the fallback when the Neumann series diverges.
pub const GMRES_MAX_ITER: usize = 400;
/// Constant of the triangular window `|l + j|j|| <= 1/2 + C' eps^2 j^2`.
pub const WINDOW_C: f64 = 10.0;

/// `<j> = max(1, |j|)`.
pub fn bracket(j: i64) -> f64 {
    j.unsigned_abs().max(1) as f64
}

/// `1 / (2 <j>^3)`.
pub fn threshold(j: i64) -> f64 {
    0.5 / bracket(j).powi(3)
}

/// `|l + j|j|| <= 1/2 + C' eps^2 j^2`.
pub fn in_window(l: i64, j: i64, eps: f64) -> bool {
    ((l + j * j.abs()) as f64).abs() <= 0.5 + WINDOW_C * eps * eps * (j * j) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub l: i64,
    pub j: i64,
    pub abs_lambda: f64,
    pub threshold: f64,
}

impl Witness {
    /// `|lambda| / threshold`; the condition holds iff this exceeds 1.
    pub fn ratio(&self) -> f64 {
        self.abs_lambda / self.threshold
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub pass: bool,
    pub n: u32,
    pub worst: Witness,
    pub violations: Vec<Witness>,
}

/// Checks `|lambda_{l,j}| > 1/(2<j>^3)` on every non-kernel `(l, j)` with
/// `|j| <= n` and any `l`. For fixed `j` the frequency is affine in `l`, so
/// only the integers next to its zero can be small; those are enumerated
/// exactly. `lambda_{-l,-j}` has the same modulus, so `j >= 0` suffices.
pub fn diophantine_check(nf: &NormalForm, n: u32) -> DiophantineReport {
    let mut worst: Option<Witness> = None;
    let mut violations = Vec::new();
    for j in 0..=n as i64 {
        let p = nf.frequency(0, j);
        let centre = (-p / nf.omega).round() as i64;
        let ls: Vec<i64> = if j == 0 { vec![1] } else { (centre - 1..=centre + 1).collect() };
        for l in ls {
            if l + j * j.abs() == 0 {
                continue;
            }
            let w = Witness { l, j, abs_lambda: nf.frequency(l, j).abs(), threshold: threshold(j) };
            if w.abs_lambda <= w.threshold {
                violations.push(w);
            }
            if worst.is_none_or(|b| w.ratio() < b.ratio()) {
                worst = Some(w);
            }
        }
    }
    let worst = worst.expect("j = 0 row is always present");
    DiophantineReport { pass: violations.is_empty(), n, worst, violations }
}

/// `Pi_N L4~ Pi_N h`.
pub fn apply_truncated(stack: &Stack, h: &SpectralField, n: u32) -> Result<SpectralField> {
    Ok(project_box(&stack.l4(&project_box(h, n))?, n))
}

fn split(u: &SpectralField, n: u32) -> (SpectralField, SpectralField) {
    let mut v = SpectralField::zero(n, n);
    let mut w = SpectralField::zero(n, n);
    for (k, c) in u.iter_canonical() {
        if k == ModeIndex::ZERO || !k.in_diamond(n as i64) {
            continue;
        }
        if in_kernel(k) {
            v.set(k, c);
        } else {
            w.set(k, c);
        }
    }
    (v, w)
}

/// How the eliminated `W` system was solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WMethod {
    Neumann,
    Gmres,
}

/// Statistics of one structured solve.
#[derive(Clone, Debug, Serialize)]
pub struct InversionStats {
    pub method: WMethod,
    pub neumann_iterations: usize,
    pub gmres_iterations: usize,
    /// Largest observed ratio of consecutive Neumann steps.
    pub contraction: f64,
    /// `|A h_W - f1| / |f1|` of the eliminated system.
    pub w_residual: f64,
}

/// The Lyapunov-Schmidt data for `Pi_N L4 Pi_N` at one stack.
pub struct LsInverse<'a> {
    pub stack: &'a Stack,
    pub n: u32,
    pub v_modes: Vec<ModeIndex>,
    /// `B = Pi_V L4 Pi_V` in coordinates.
    pub b: DMatrix<f64>,
    b_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Columns `Pi_W L4 e_v = R_WV e_v`.
    rwv: Vec<SpectralField>,
    w_modes: Vec<ModeIndex>,
    /// Fall back to GMRES (same Krylov space as the Neumann partial sums)
    /// when the series diverges; otherwise divergence is an error.
    pub krylov_fallback: bool,
}

impl<'a> LsInverse<'a> {
    pub fn new(stack: &'a Stack, n: u32) -> Result<Self> {
        if n > stack.box_a {
            return Err(Error::Validation(format!("truncation {n} exceeds the ambient box {}", stack.box_a)));
        }
        let v_modes = kernel_modes(n);
        let m = v_modes.len();
        let mut b = DMatrix::zeros(m, m);
        let mut rwv = Vec::with_capacity(m);
        for (c, &k) in v_modes.iter().enumerate() {
            let col = apply_truncated(stack, &x_basis(k, n), n)?;
            let (cv, cw) = split(&col, n);
            for (r, y) in y_coords(&cv, &v_modes).into_iter().enumerate() {
                b[(r, c)] = y;
            }
            rwv.push(cw);
        }
        let sigma_min = b.clone().svd(false, false).singular_values.min();
        if m > 0 && sigma_min <= 1e-14 * b.norm() {
            return Err(Error::Singular { sigma_min });
        }
        let b_lu = b.clone().lu();
        let w_modes = diamond_modes(n).into_iter().filter(|&k| !in_kernel(k)).collect();
        Ok(LsInverse { stack, n, v_modes, b, b_lu, rwv, w_modes, krylov_fallback: true })
    }

    /// `B^{-1}` on a `Y` field supported on `V`, as an `X` field.
    pub fn invert_v_block(&self, f_v: &SpectralField) -> Result<SpectralField> {
        if self.v_modes.is_empty() {
            return Ok(SpectralField::zero(self.n, self.n));
        }
        let rhs = DVector::from_vec(y_coords(f_v, &self.v_modes));
        let x = self.b_lu.solve(&rhs).ok_or(Error::Singular { sigma_min: 0.0 })?;
        Ok(x_field(&self.v_modes, x.as_slice(), self.n))
    }

    /// `R_WV z` for `z` on `V`.
    fn r_wv(&self, z: &SpectralField) -> SpectralField {
        let mut acc = SpectralField::zero(self.n, self.n);
        for (k, col) in self.v_modes.iter().zip(&self.rwv) {
            acc = acc.axpy(z.get(*k).re, col);
        }
        acc
    }

    fn d_inv_w(&self, f: &SpectralField) -> SpectralField {
        let nf = &self.stack.nf;
        f.map_symbol(|k| if in_kernel(k) { 0.0.into() } else { 1.0 / nf.eigenvalue(k.l as i64, k.j as i64) })
    }

    /// `R~_W h = R_WW h - R_WV B^{-1} R_VW h` for `h` on `W`.
    fn r_tilde(&self, h: &SpectralField) -> Result<SpectralField> {
        let lh = apply_truncated(self.stack, h, self.n)?;
        let (lv, lw) = split(&lh, self.n);
        let rww = lw.axpy(-1.0, &self.stack.d(h));
        let corr = self.r_wv(&self.invert_v_block(&lv)?);
        Ok(rww.axpy(-1.0, &corr))
    }

    /// `A h = D_W h + R~_W h`.
    fn schur(&self, h: &SpectralField) -> Result<SpectralField> {
        Ok(self.stack.d(h).axpy(1.0, &self.r_tilde(h)?))
    }

    /// Solves `D_W h + R~_W h = f1` by `h <- D_W^{-1} (f1 - R~_W h)`.
    pub fn invert_w_block(&self, f1: &SpectralField) -> Result<(SpectralField, InversionStats)> {
        let mut stats =
            InversionStats { method: WMethod::Neumann, neumann_iterations: 0, gmres_iterations: 0, contraction: 0.0, w_residual: 0.0 };
        match self.neumann(f1, &mut stats) {
            Ok(h) => Ok((h, stats)),
            Err(Error::Neumann { .. }) if self.krylov_fallback => {
                stats.method = WMethod::Gmres;
                let h = self.gmres(f1, &mut stats)?;
                Ok((h, stats))
            }
            Err(e) => Err(e),
        }
    }

    fn finish(&self, h: &SpectralField, f1: &SpectralField, stats: &mut InversionStats) -> Result<()> {
        let res = self.schur(h)?.axpy(-1.0, f1);
        stats.w_residual = res.l2_norm() / f1.l2_norm();
        Ok(())
    }

    fn neumann(&self, f1: &SpectralField, stats: &mut InversionStats) -> Result<SpectralField> {
        let mut h = self.d_inv_w(f1);
        if f1.l2_norm() == 0.0 {
            return Ok(h);
        }
        let mut last_step = f64::INFINITY;
        for it in 1..=NEUMANN_MAX_ITER {
            let next = self.d_inv_w(&f1.axpy(-1.0, &self.r_tilde(&h)?));
            let step = next.distance(&h);
            if it > 1 {
                stats.contraction = stats.contraction.max(step / last_step);
            }
            h = next;
            stats.neumann_iterations = it;
            if step <= NEUMANN_TOL * h.l2_norm() {
                self.finish(&h, f1, stats)?;
                return Ok(h);
            }
            if step > last_step {
                return Err(Error::Neumann { what: "W block", ratio: step / last_step });
            }
            last_step = step;
        }
        Err(Error::Neumann { what: "W block", ratio: stats.contraction })
    }

    /// GMRES on `(I + R~_W D_W^{-1}) g = f1`, `h = D_W^{-1} g`, in the
    /// coordinates of `Y` on the `W` modes.
    fn gmres(&self, f1: &SpectralField, stats: &mut InversionStats) -> Result<SpectralField> {
        let modes = &self.w_modes;
        let to_field = |g: &[f64]| {
            SpectralField::from_modes(modes.iter().zip(g).map(|(&k, &c)| (k, num_complex::Complex64::new(0.0, c))), self.n, self.n)
        };
        let op = |g: &[f64]| -> Result<Vec<f64>> { Ok(y_coords(&self.schur(&self.d_inv_w(&to_field(g)))?, modes)) };
        let b = y_coords(f1, modes);
        let g = gmres(op, &b, NEUMANN_TOL, GMRES_MAX_ITER.min(b.len() + 1), &mut stats.gmres_iterations)?;
        let h = self.d_inv_w(&to_field(&g));
        self.finish(&h, f1, stats)?;
        Ok(h)
    }

    /// `(Pi_N L4 Pi_N)^{-1} f`.
    pub fn solve(&self, f: &SpectralField) -> Result<(SpectralField, InversionStats)> {
        let (f_v, f_w) = split(f, self.n);
        let z = self.invert_v_block(&f_v)?;
        let f1 = f_w.axpy(-1.0, &self.r_wv(&z));
        let (h_w, stats) = self.invert_w_block(&f1)?;
        let lw = apply_truncated(self.stack, &h_w, self.n)?;
        let (lv, _) = split(&lw, self.n);
        let h_v = self.invert_v_block(&f_v.axpy(-1.0, &lv))?;
        Ok((h_v.axpy(1.0, &h_w), stats))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unrestarted GMRES from `x = 0` with modified Gram-Schmidt and Givens
/// rotations. Stops at relative residual `tol`.
pub fn gmres<F>(op: F, b: &[f64], tol: f64, max_iter: usize, iters: &mut usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = b.len();
    let beta = dot(b, b).sqrt();
    if beta == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    let mut h: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut k = 0;
    while k < max_iter {
        let mut w = op(&basis[k])?;
        let mut col = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            col[i] = dot(&w, v);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= col[i] * vi;
            }
        }
        col[k + 1] = dot(&w, &w).sqrt();
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[k].hypot(col[k + 1]);
        let (c, s) = (col[k] / r, col[k + 1] / r);
        cs.push(c);
        sn.push(s);
        col[k] = r;
        let wn = col_norm(&w);
        let nb = w.iter().map(|x| x / wn).collect::<Vec<_>>();
        g.push(-s * g[k]);
        g[k] *= c;
        col.truncate(k + 1);
        h.push(col);
        k += 1;
        *iters = k;
        if g[k].abs() <= tol * beta || !nb.iter().all(|x| x.is_finite()) {
            break;
        }
        basis.push(nb);
    }
    if g[k].abs() > tol * beta {
        return Err(Error::Neumann { what: "W block (GMRES)", ratio: g[k].abs() / beta });
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= h[jj][i] * yj;
        }
        y[i] = acc / h[i][i];
    }
    let mut x = vec![0.0; n];
    for (v, yi) in basis.iter().zip(&y) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += yi * vi;
        }
    }
    Ok(x)
}

fn col_norm(w: &[f64]) -> f64 {
    dot(w, w).sqrt()
}

/// Structured inverse of `Pi_N L4 Pi_N`, refusing when the Diophantine
/// condition fails.
pub fn invert_l4_truncated(stack: &Stack, rhs: &SpectralField, n: u32) -> Result<(SpectralField, InversionStats)> {
    let rep = diophantine_check(&stack.nf, n);
    if !rep.pass {
        let w = rep.violations[0];
        return Err(Error::Diophantine { l: w.l as i32, j: w.j as i32 });
    }
    LsInverse::new(stack, n)?.solve(rhs)
}

/// Dense matrix of a linear map `X_0N -> Y_N` in coordinates.
pub fn dense_matrix<F>(modes: &[ModeIndex], n: u32, apply: F) -> Result<DMatrix<f64>>
where
    F: Fn(&SpectralField) -> Result<SpectralField> + Sync,
{
    use rayon::prelude::*;
    let cols: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|&k| apply(&x_basis(k, n)).map(|c| y_coords(&c, modes)))
        .collect::<Result<_>>()?;
    let m = modes.len();
    Ok(DMatrix::from_fn(m, m, |r, c| cols[c][r]))
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleStats {
    pub dimension: usize,
    pub condition: f64,
}

/// Solves `M x = y` densely, reporting the 2-norm condition number.
pub fn dense_solve(mat: &DMatrix<f64>, rhs: &[f64]) -> Result<(Vec<f64>, OracleStats)> {
    let sv = mat.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-14 * smax) {
        return Err(Error::Singular { sigma_min: smin });
    }
    let x = mat.clone().lu().solve(&DVector::from_column_slice(rhs)).ok_or(Error::Singular { sigma_min: smin })?;
    Ok((x.as_slice().to_vec(), OracleStats { dimension: rhs.len(), condition: smax / smin }))
}

/// Assembles `Pi_N L4 Pi_N` column by column and solves directly.
pub fn dense_oracle_inverse(stack: &Stack, rhs: &SpectralField, n: u32) -> Result<(SpectralField, OracleStats)> {
    let modes = diamond_modes(n);
    let mat = dense_matrix(&modes, n, |e| apply_truncated(stack, e, n))?;
    let (x, stats) = dense_solve(&mat, &y_coords(rhs, &modes))?;
    Ok((x_field(&modes, &x, n), stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_normal_form_passes() {
        let rep = diophantine_check(&NormalForm::trivial(), 40);
        assert!(rep.pass);
        assert_eq!(rep.worst.abs_lambda, 1.0);
    }

    #[test]
    fn window_contains_the_resonant_line() {
        assert!(in_window(-9, 3, 0.0));
        assert!(!in_window(-8, 3, 0.0));
        assert!(in_window(-8, 3, 0.2));
    }
}
