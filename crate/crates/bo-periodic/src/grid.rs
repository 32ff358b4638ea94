//! Dense tensor grids on the torus and the FFT bridge to [`SpectralField`].
//!
//! Convention: `u(t, x) = sum u_{l,j} e^{i(l t + j x)}` with nodes
//! `t_a = 2 pi a / gt`, `x_b = 2 pi b / gx`. Mode `l` lives in bin `l mod gt`.
//! Values are complex so that the complex notation of the descent can use the
//! same machinery; real fields simply carry a zero imaginary part.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::spectral::{ModeIndex, SpectralField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smallest `2^a 3^b 5^c` that is `>= n`.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[derive(Clone)]
pub struct Grid {
    pub gt: usize,
    pub gx: usize,
    t_fwd: Arc<dyn Fft<f64>>,
    t_inv: Arc<dyn Fft<f64>>,
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid({} x {})", self.gt, self.gx)
    }
}

impl Grid {
    pub fn new(gt: usize, gx: usize) -> Self {
        let mut planner = FftPlanner::new();
        Grid {
            gt,
            gx,
            t_fwd: planner.plan_fft_forward(gt),
            t_inv: planner.plan_fft_inverse(gt),
            x_fwd: planner.plan_fft_forward(gx),
            x_inv: planner.plan_fft_inverse(gx),
        }
    }

    /// Square grid resolving every frequency with `|l|, |j| <= band` without
    /// wrap-around: size `>= 2 band + 2`.
    pub fn for_band(band: usize) -> Self {
        let g = smooth_size(2 * band + 2);
        Grid::new(g, g)
    }

    pub fn len(&self) -> usize {
        self.gt * self.gx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest frequency that is represented without ambiguity.
    pub fn band(&self) -> usize {
        (self.gt.min(self.gx) - 1) / 2
    }

    pub fn t_node(&self, a: usize) -> f64 {
        2.0 * PI * a as f64 / self.gt as f64
    }

    pub fn x_node(&self, b: usize) -> f64 {
        2.0 * PI * b as f64 / self.gx as f64
    }

    /// Signed frequency of bin `a` in a length-`n` transform; `None` for the
    /// Nyquist bin of even lengths.
    pub fn signed(a: usize, n: usize) -> Option<i64> {
        if n % 2 == 0 && a == n / 2 {
            None
        } else if a <= n / 2 {
            Some(a as i64)
        } else {
            Some(a as i64 - n as i64)
        }
    }

    fn bin(f: i64, n: usize) -> usize {
        f.rem_euclid(n as i64) as usize
    }

    pub fn zeros(&self) -> GridFn {
        GridFn { gt: self.gt, gx: self.gx, data: vec![ZERO; self.len()] }
    }

    pub fn constant(&self, c: Complex64) -> GridFn {
        GridFn { gt: self.gt, gx: self.gx, data: vec![c; self.len()] }
    }

    /// Samples `f(t, x)` at the nodes.
    pub fn sample<F: Fn(f64, f64) -> Complex64>(&self, f: F) -> GridFn {
        let mut g = self.zeros();
        for a in 0..self.gt {
            let t = self.t_node(a);
            for b in 0..self.gx {
                g.data[a * self.gx + b] = f(t, self.x_node(b));
            }
        }
        g
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let (ft, fx) = if forward { (&self.t_fwd, &self.x_fwd) } else { (&self.t_inv, &self.x_inv) };
        fx.process(data);
        let mut tr = transpose(data, self.gt, self.gx);
        ft.process(&mut tr);
        let back = transpose(&tr, self.gx, self.gt);
        data.copy_from_slice(&back);
    }

    /// Nodal values of a spectrum.
    pub fn synth(&self, s: &GridSpec) -> GridFn {
        let mut data = s.data.clone();
        self.transform(&mut data, false);
        GridFn { gt: self.gt, gx: self.gx, data }
    }

    /// Interpolating trigonometric coefficients of nodal values.
    pub fn analyze(&self, f: &GridFn) -> GridSpec {
        let mut data = f.data.clone();
        self.transform(&mut data, true);
        let norm = 1.0 / self.len() as f64;
        for z in &mut data {
            *z *= norm;
        }
        GridSpec { gt: self.gt, gx: self.gx, data }
    }

    /// Embeds a real field; panics if a mode does not fit the grid band.
    pub fn spec_of(&self, u: &SpectralField) -> GridSpec {
        let mut s = GridSpec { gt: self.gt, gx: self.gx, data: vec![ZERO; self.len()] };
        for (k, c) in u.iter() {
            assert!(
                (k.l.unsigned_abs() as usize) * 2 < self.gt && (k.j.unsigned_abs() as usize) * 2 < self.gx,
                "mode {k} does not fit a {}x{} grid",
                self.gt,
                self.gx
            );
            let i = Self::bin(k.l as i64, self.gt) * self.gx + Self::bin(k.j as i64, self.gx);
            s.data[i] += c;
        }
        s
    }

    pub fn values_of(&self, u: &SpectralField) -> GridFn {
        self.synth(&self.spec_of(u))
    }

    /// Spectral multiplier applied to nodal values.
    pub fn apply<S: Fn(i64, i64) -> Complex64>(&self, f: &GridFn, symbol: S) -> GridFn {
        self.synth(&self.analyze(f).map_symbol(symbol))
    }

    pub fn dx(&self, f: &GridFn) -> GridFn {
        self.apply(f, |_, j| Complex64::new(0.0, j as f64))
    }

    pub fn dt(&self, f: &GridFn) -> GridFn {
        self.apply(f, |l, _| Complex64::new(0.0, l as f64))
    }

    pub fn dxx(&self, f: &GridFn) -> GridFn {
        self.apply(f, |_, j| Complex64::new(-(j * j) as f64, 0.0))
    }

    /// `d_x^{-1}` with the zero-mean convention.
    pub fn dx_inv(&self, f: &GridFn) -> GridFn {
        self.apply(f, |_, j| if j == 0 { ZERO } else { Complex64::new(0.0, -1.0 / j as f64) })
    }

    /// `d_t^{-1} Pi_T`-type primitive: annihilates `l = 0`.
    pub fn dt_inv(&self, f: &GridFn) -> GridFn {
        self.apply(f, |l, _| if l == 0 { ZERO } else { Complex64::new(0.0, -1.0 / l as f64) })
    }

    pub fn hilbert(&self, f: &GridFn) -> GridFn {
        self.apply(f, |_, j| Complex64::new(0.0, -(j.signum() as f64)))
    }

    /// `Pi_T + Pi_C`: the space mean, as a function of `t`.
    pub fn x_mean(&self, f: &GridFn) -> GridFn {
        let mut out = self.zeros();
        for a in 0..self.gt {
            let row = &f.data[a * self.gx..(a + 1) * self.gx];
            let m: Complex64 = row.iter().sum::<Complex64>() / self.gx as f64;
            out.data[a * self.gx..(a + 1) * self.gx].fill(m);
        }
        out
    }

    /// `Pi_E = I - (Pi_T + Pi_C)`.
    pub fn pi_e(&self, f: &GridFn) -> GridFn {
        f.sub(&self.x_mean(f))
    }

    /// `Pi_T`.
    pub fn pi_t(&self, f: &GridFn) -> GridFn {
        let m = self.x_mean(f);
        let c = f.mean();
        m.map(|z| z - c)
    }

    /// Evaluates the trigonometric interpolant of `s` at displaced nodes.
    /// Node `(a, b)` is `(t[a], x[a * gx + b])`: the time coordinate depends
    /// on the row only, which makes the sum separable.
    pub fn eval_at(&self, s: &GridSpec, nodes: &Nodes) -> GridFn {
        let top = s.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let (lmax, jmax) = s.extent(1e-17 * top);
        let gx = self.gx;
        let rows: Vec<Vec<Complex64>> = (0..self.gt)
            .into_par_iter()
            .map(|a| {
                let coeffs = s.row_coefficients(nodes.t[a], lmax, jmax);
                (0..gx)
                    .map(|b| sum_series(&coeffs, jmax, nodes.x[a * gx + b]))
                    .collect()
            })
            .collect();
        GridFn { gt: self.gt, gx, data: rows.concat() }
    }
}

/// `sum_{|j| <= jmax} c[j + jmax] e^{i j x}`.
pub fn sum_series(c: &[Complex64], jmax: i64, x: f64) -> Complex64 {
    let w = Complex64::from_polar(1.0, x);
    let mut e = Complex64::from_polar(1.0, -(jmax as f64) * x);
    let mut acc = ZERO;
    for cj in c {
        acc += cj * e;
        e *= w;
    }
    acc
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Displaced evaluation points of a torus map `(t, x) -> (t', x')`.
#[derive(Clone, Debug)]
pub struct Nodes {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl Nodes {
    pub fn identity(g: &Grid) -> Self {
        Nodes {
            t: (0..g.gt).map(|a| g.t_node(a)).collect(),
            x: (0..g.len()).map(|i| g.x_node(i % g.gx)).collect(),
        }
    }
}

/// Nodal values on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    pub gt: usize,
    pub gx: usize,
    pub data: Vec<Complex64>,
}

impl GridFn {
    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.data[a * self.gx + b]
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> GridFn {
        GridFn { gt: self.gt, gx: self.gx, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn zip<F: Fn(Complex64, Complex64) -> Complex64>(&self, o: &GridFn, f: F) -> GridFn {
        debug_assert_eq!(self.data.len(), o.data.len());
        GridFn {
            gt: self.gt,
            gx: self.gx,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, o: &GridFn) -> GridFn {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &GridFn) -> GridFn {
        self.zip(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &GridFn) -> GridFn {
        self.zip(o, |a, b| a * b)
    }

    pub fn div(&self, o: &GridFn) -> GridFn {
        self.zip(o, |a, b| a / b)
    }

    pub fn scale(&self, c: Complex64) -> GridFn {
        self.map(|z| z * c)
    }

    pub fn scale_re(&self, c: f64) -> GridFn {
        self.map(|z| z * c)
    }

    pub fn add_const(&self, c: Complex64) -> GridFn {
        self.map(|z| z + c)
    }

    pub fn re(&self) -> GridFn {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn im(&self) -> GridFn {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    pub fn mean(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() / self.data.len() as f64
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn sup_im(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Root mean square over the nodes, equal to the `l2` norm of the
    /// interpolating coefficients.
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// Values of one time row.
    pub fn row(&self, a: usize) -> &[Complex64] {
        &self.data[a * self.gx..(a + 1) * self.gx]
    }
}

/// Dense trigonometric coefficients in FFT bin layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub gt: usize,
    pub gx: usize,
    pub data: Vec<Complex64>,
}

impl GridSpec {
    pub fn get(&self, l: i64, j: i64) -> Complex64 {
        if 2 * l.unsigned_abs() as usize >= self.gt || 2 * j.unsigned_abs() as usize >= self.gx {
            return ZERO;
        }
        self.data[Grid::bin(l, self.gt) * self.gx + Grid::bin(j, self.gx)]
    }

    /// Multiplies bin `(l, j)` by `symbol(l, j)`; Nyquist bins are zeroed.
    pub fn map_symbol<S: Fn(i64, i64) -> Complex64>(&self, symbol: S) -> GridSpec {
        let mut out = self.clone();
        for a in 0..self.gt {
            let l = Grid::signed(a, self.gt);
            for b in 0..self.gx {
                let j = Grid::signed(b, self.gx);
                let i = a * self.gx + b;
                out.data[i] = match (l, j) {
                    (Some(l), Some(j)) => self.data[i] * symbol(l, j),
                    _ => ZERO,
                };
            }
        }
        out
    }

    /// Largest `|l|` and `|j|` carrying a coefficient above `tol`.
    pub fn extent(&self, tol: f64) -> (i64, i64) {
        let (mut lm, mut jm) = (0i64, 0i64);
        for a in 0..self.gt {
            let Some(l) = Grid::signed(a, self.gt) else { continue };
            for b in 0..self.gx {
                let Some(j) = Grid::signed(b, self.gx) else { continue };
                if self.data[a * self.gx + b].norm() > tol {
                    lm = lm.max(l.abs());
                    jm = jm.max(j.abs());
                }
            }
        }
        (lm, jm)
    }

    /// `c_j(t) = sum_l s_{l,j} e^{i l t}` for `|j| <= jmax`, indexed by `j + jmax`.
    pub fn row_coefficients(&self, t: f64, lmax: i64, jmax: i64) -> Vec<Complex64> {
        let et: Vec<Complex64> = (-lmax..=lmax).map(|l| Complex64::from_polar(1.0, l as f64 * t)).collect();
        (-jmax..=jmax)
            .map(|j| {
                (-lmax..=lmax)
                    .zip(&et)
                    .map(|(l, e)| self.get(l, j) * e)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// Real field from the coefficients inside the rectangle `|l| <= nt`, `|j| <= nx`
    /// (Hermitian part taken).
    pub fn to_field(&self, nt: u32, nx: u32) -> SpectralField {
        self.to_field_filtered(nt, nx, |_| true)
    }

    /// Real field from the coefficients in the diamond `|l| + |j| <= n`.
    pub fn to_field_diamond(&self, n: u32) -> SpectralField {
        self.to_field_filtered(n, n, |k| k.in_diamond(n as i64))
    }

    fn to_field_filtered<P: Fn(ModeIndex) -> bool>(&self, nt: u32, nx: u32, keep: P) -> SpectralField {
        let mut u = SpectralField::zero(nt, nx);
        let nt = nt.min((self.gt as u32 - 1) / 2) as i32;
        let nx = nx.min((self.gx as u32 - 1) / 2) as i32;
        for l in -nt..=nt {
            for j in -nx..=nx {
                let k = ModeIndex::new(l, j);
                if !k.is_canonical() || !keep(k) {
                    continue;
                }
                let c = self.get(l as i64, j as i64);
                let cm = self.get(-(l as i64), -(j as i64));
                let v = (c + cm.conj()) * 0.5;
                if v.norm_sqr() > 0.0 {
                    u.set(k, v);
                }
            }
        }
        u
    }
}
