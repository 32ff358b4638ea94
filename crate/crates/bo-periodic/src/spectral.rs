//! Real-valued trigonometric polynomials on the two-torus.
//!
//! A field `u(t, x) = sum_k u_k e^{i(l t + j x)}` is stored as a sparse map
//! from [`ModeIndex`] to complex amplitude. Both `k` and `-k` are stored and
//! kept Hermitian (`u_{-k} = conj(u_k)`), so the field is real-valued.
//! Every field carries a rectangular truncation `(nt, nx)` bounding `|l|` and
//! `|j|`; the diamond boxes `|l| + |j| <= N` used by the iteration are
//! projections inside that rectangle.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the rectangle produced by [`SpectralField::product`].
pub const DEFAULT_MAX_BOX: u32 = 1024;

/// Absolute tolerance on the off-parity mass used by [`SpectralField::parity`].
pub const PARITY_TOL: f64 = 1e-10;

/// Frequency pair `k = (l, j)`: `l` in time, `j` in space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: i32,
    pub j: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { l: 0, j: 0 };

    pub const fn new(l: i32, j: i32) -> Self {
        ModeIndex { l, j }
    }

    /// The kernel mode `q_j = e^{i(-j|j| t + j x)}`.
    pub const fn kernel(j: i32) -> Self {
        ModeIndex { l: -j * j.abs(), j }
    }

    pub const fn neg(self) -> Self {
        ModeIndex { l: -self.l, j: -self.j }
    }

    /// Euclidean magnitude `sqrt(l^2 + j^2)`.
    pub fn euclid(self) -> f64 {
        ((self.l as f64).powi(2) + (self.j as f64).powi(2)).sqrt()
    }

    /// `|l| + |j|`, the norm of the truncation boxes.
    pub const fn l1(self) -> i64 {
        (self.l as i64).abs() + (self.j as i64).abs()
    }

    /// `<k> = max(1, |k|)` with `|k|` Euclidean.
    pub fn bracket(self) -> f64 {
        self.euclid().max(1.0)
    }

    /// `l + j|j|`; zero exactly on the kernel `V` of `d_t + d_xx H`.
    pub const fn resonance(self) -> i64 {
        self.l as i64 + (self.j as i64) * (self.j as i64).abs()
    }

    pub const fn in_kernel(self) -> bool {
        self.resonance() == 0
    }

    /// Canonical half-space: `j > 0`, or `j = 0` and `l >= 0`.
    pub const fn is_canonical(self) -> bool {
        self.j > 0 || (self.j == 0 && self.l >= 0)
    }

    pub const fn in_diamond(self, n: i64) -> bool {
        self.l1() <= n
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.l, self.j)
    }
}

/// Which norm of `k` enters `<k>` in a Sobolev weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KNorm {
    Euclidean,
    L1,
}

/// Index sets of the orthogonal projections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Subspace {
    /// The constant mode `(0, 0)`.
    C,
    /// `j = 0`, `l != 0`: nonconstant functions of time only.
    T,
    /// `j != 0`: zero space-mean part.
    E,
    /// Kernel modes `l + j|j| = 0` (contains `(0, 0)`).
    V,
    /// Complement of `V`.
    W,
    /// `V` without the constant mode.
    V0,
    /// Zero-mean fields, `T + E`.
    Z0,
    /// Even part: real coefficients.
    X,
    /// Odd part: imaginary coefficients.
    Y,
    /// Diamond `|l| + |j| <= N`.
    FourierBox(i64),
    /// Complement of the diamond `|l| + |j| <= N`.
    FourierBoxComplement(i64),
}

impl Subspace {
    /// Whether mode `k` belongs to the index set (`X`, `Y` are not index sets
    /// and answer `true`).
    pub fn contains(&self, k: ModeIndex) -> bool {
        match *self {
            Subspace::C => k == ModeIndex::ZERO,
            Subspace::T => k.j == 0 && k.l != 0,
            Subspace::E => k.j != 0,
            Subspace::V => k.in_kernel(),
            Subspace::W => !k.in_kernel(),
            Subspace::V0 => k.in_kernel() && k != ModeIndex::ZERO,
            Subspace::Z0 => k != ModeIndex::ZERO,
            Subspace::X | Subspace::Y => true,
            Subspace::FourierBox(n) => k.in_diamond(n),
            Subspace::FourierBoxComplement(n) => !k.in_diamond(n),
        }
    }
}

/// Fourier multipliers acting coefficientwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Multiplier {
    /// `H e^{ijx} = -i sign(j) e^{ijx}`.
    Hilbert,
    Dx,
    Dt,
    /// `e^{ijx} / (ij)`, zero on `j = 0`.
    DxInv,
    /// `e^{ilt} / (il)`, zero on `l = 0`.
    DtInv,
    /// `L = d_t + d_xx H`, symbol `i(l + j|j|)`.
    L,
    /// `P_eps = eps^2 Pi_V + Pi_W`.
    ScalingPeps(f64),
    /// `P_eps^{-1} = eps^{-2} Pi_V + Pi_W`.
    ScalingPepsInv(f64),
}

impl Multiplier {
    pub fn symbol(&self, k: ModeIndex) -> Complex64 {
        let (l, j) = (k.l as f64, k.j as f64);
        match *self {
            Multiplier::Hilbert => Complex64::new(0.0, -j.signum() * (k.j != 0) as i32 as f64),
            Multiplier::Dx => Complex64::new(0.0, j),
            Multiplier::Dt => Complex64::new(0.0, l),
            Multiplier::DxInv => {
                if k.j == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / j)
                }
            }
            Multiplier::DtInv => {
                if k.l == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -1.0 / l)
                }
            }
            Multiplier::L => Complex64::new(0.0, k.resonance() as f64),
            Multiplier::ScalingPeps(e) => {
                Complex64::new(if k.in_kernel() { e * e } else { 1.0 }, 0.0)
            }
            Multiplier::ScalingPepsInv(e) => {
                Complex64::new(if k.in_kernel() { 1.0 / (e * e) } else { 1.0 }, 0.0)
            }
        }
    }
}

/// Parity class under `(t, x) -> (-t, -x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// Even: all coefficients real (the space `X`).
    Even,
    /// Odd: all coefficients imaginary (the space `Y`).
    Odd,
    Neither,
}

/// A real-valued trigonometric polynomial on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: BTreeMap<ModeIndex, Complex64>,
    nt: u32,
    nx: u32,
}

impl SpectralField {
    pub fn zero(nt: u32, nx: u32) -> Self {
        SpectralField { coeffs: BTreeMap::new(), nt, nx }
    }

    pub fn constant(c: f64, nt: u32, nx: u32) -> Self {
        let mut u = Self::zero(nt, nx);
        u.set(ModeIndex::ZERO, Complex64::new(c, 0.0));
        u
    }

    /// Single Hermitian pair `c e_k + conj(c) e_{-k}`.
    pub fn mode(k: ModeIndex, c: Complex64, nt: u32, nx: u32) -> Self {
        let mut u = Self::zero(nt.max(k.l.unsigned_abs()), nx.max(k.j.unsigned_abs()));
        u.set(k, c);
        u
    }

    /// Builds a field from amplitudes given on any set of modes; the partner
    /// `-k` of each entry is filled with the conjugate. At `k = 0` only the
    /// real part is kept.
    pub fn from_modes<Iter>(entries: Iter, nt: u32, nx: u32) -> Self
    where
        Iter: IntoIterator<Item = (ModeIndex, Complex64)>,
    {
        let mut u = Self::zero(nt, nx);
        for (k, c) in entries {
            u.set(k, c);
        }
        u
    }

    /// Assembles from a complete (both halves) coefficient map, symmetrizing
    /// `u_k <- (u_k + conj(u_{-k})) / 2` and dropping modes outside the box.
    pub fn from_map_symmetrized(map: &BTreeMap<ModeIndex, Complex64>, nt: u32, nx: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        for (&k, &c) in map {
            if k.l.unsigned_abs() > nt || k.j.unsigned_abs() > nx {
                continue;
            }
            let partner = map.get(&k.neg()).copied().unwrap_or_default();
            let v = (c + partner.conj()) * 0.5;
            coeffs.insert(k, v);
            coeffs.insert(k.neg(), v.conj());
        }
        SpectralField { coeffs, nt, nx }
    }

    /// Sets `u_k = c` and `u_{-k} = conj(c)`, growing the box if needed.
    pub fn set(&mut self, k: ModeIndex, c: Complex64) {
        self.nt = self.nt.max(k.l.unsigned_abs());
        self.nx = self.nx.max(k.j.unsigned_abs());
        if k == ModeIndex::ZERO {
            self.coeffs.insert(k, Complex64::new(c.re, 0.0));
        } else {
            self.coeffs.insert(k, c);
            self.coeffs.insert(k.neg(), c.conj());
        }
    }

    /// Adds `c` to `u_k` and `conj(c)` to `u_{-k}`.
    pub fn add_at(&mut self, k: ModeIndex, c: Complex64) {
        let v = self.get(k) + c;
        self.set(k, v);
    }

    pub fn get(&self, k: ModeIndex) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn truncation(&self) -> (u32, u32) {
        (self.nt, self.nx)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// All stored modes, both halves, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// Stored modes in the canonical half-space.
    pub fn iter_canonical(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        self.iter().filter(|(k, _)| k.is_canonical())
    }

    /// Same coefficients inside a new rectangle (modes outside are dropped).
    pub fn with_truncation(&self, nt: u32, nx: u32) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.l.unsigned_abs() <= nt && k.j.unsigned_abs() <= nx)
            .map(|(&k, &c)| (k, c))
            .collect();
        SpectralField { coeffs, nt, nx }
    }

    /// Largest `|l|` and `|j|` among nonzero coefficients.
    pub fn support_extent(&self) -> (u32, u32) {
        self.iter()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .fold((0, 0), |(a, b), (k, _)| (a.max(k.l.unsigned_abs()), b.max(k.j.unsigned_abs())))
    }

    /// Drops exact zeros from the map.
    pub fn pruned(mut self) -> Self {
        self.coeffs.retain(|_, c| c.norm_sqr() > 0.0);
        self
    }

    pub fn map_symbol<F: Fn(ModeIndex) -> Complex64>(&self, symbol: F) -> Self {
        let coeffs = self.coeffs.iter().map(|(&k, &c)| (k, c * symbol(k))).collect();
        SpectralField { coeffs, nt: self.nt, nx: self.nx }
    }

    pub fn apply(&self, m: Multiplier) -> Self {
        self.map_symbol(|k| m.symbol(k))
    }

    pub fn project(&self, tag: Subspace) -> Self {
        match tag {
            Subspace::X => self.map_coeffs(|c| Complex64::new(c.re, 0.0)),
            Subspace::Y => self.map_coeffs(|c| Complex64::new(0.0, c.im)),
            _ => {
                let coeffs = self
                    .coeffs
                    .iter()
                    .filter(|(k, _)| tag.contains(**k))
                    .map(|(&k, &c)| (k, c))
                    .collect();
                SpectralField { coeffs, nt: self.nt, nx: self.nx }
            }
        }
    }

    fn map_coeffs<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let coeffs = self.coeffs.iter().map(|(&k, &c)| (k, f(c))).collect();
        SpectralField { coeffs, nt: self.nt, nx: self.nx }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_coeffs(|c| c * a)
    }

    /// `u + a v`, on the union of the two boxes.
    pub fn axpy(&self, a: f64, v: &SpectralField) -> Self {
        let mut out = self.clone();
        out.nt = out.nt.max(v.nt);
        out.nx = out.nx.max(v.nx);
        for (&k, &c) in &v.coeffs {
            *out.coeffs.entry(k).or_default() += c * a;
        }
        out
    }

    /// Exact product of trigonometric polynomials; the box grows to the sum
    /// of the two boxes.
    pub fn product(&self, other: &SpectralField) -> Result<SpectralField> {
        self.product_capped(other, DEFAULT_MAX_BOX)
    }

    pub fn product_capped(&self, other: &SpectralField, max_box: u32) -> Result<SpectralField> {
        let nt = self.nt + other.nt;
        let nx = self.nx + other.nx;
        if nt > max_box || nx > max_box {
            return Err(Error::BoxOverflow { nt, nx, max: max_box });
        }
        let mut acc: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
        for (&k1, &c1) in &self.coeffs {
            if c1.norm_sqr() == 0.0 {
                continue;
            }
            for (&k2, &c2) in &other.coeffs {
                let k = ModeIndex::new(k1.l + k2.l, k1.j + k2.j);
                *acc.entry(k).or_default() += c1 * c2;
            }
        }
        Ok(SpectralField::from_map_symmetrized(&acc, nt, nx))
    }

    /// `||u||_s` with `<k>` Euclidean.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_with(s, KNorm::Euclidean)
    }

    pub fn sobolev_norm_with(&self, s: f64, norm: KNorm) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let w = match norm {
                    KNorm::Euclidean => k.bracket(),
                    KNorm::L1 => (k.l1() as f64).max(1.0),
                };
                c.norm_sqr() * w.powf(2.0 * s)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `||u - v||_0`.
    pub fn distance(&self, other: &SpectralField) -> f64 {
        (self - other).l2_norm()
    }

    /// Classifies by the `l2` mass of the off-parity part.
    pub fn parity(&self, tol: f64) -> Parity {
        let (even, odd) = self.parity_masses();
        if odd <= tol {
            Parity::Even
        } else if even <= tol {
            Parity::Odd
        } else {
            Parity::Neither
        }
    }

    /// `(||Re part||, ||Im part||)` of the coefficients.
    pub fn parity_masses(&self) -> (f64, f64) {
        let (mut e, mut o) = (0.0, 0.0);
        for c in self.coeffs.values() {
            e += c.re * c.re;
            o += c.im * c.im;
        }
        (e.sqrt(), o.sqrt())
    }

    /// `max_k |u_{-k} - conj(u_k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(&k, &c)| (self.get(k.neg()) - c.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise value at `(t, x)` by direct summation.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| (c * Complex64::from_polar(1.0, k.l as f64 * t + k.j as f64 * x)).re)
            .sum()
    }

    /// Largest coefficientwise difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        let mut m: f64 = 0.0;
        for (&k, &c) in &self.coeffs {
            m = m.max((c - other.get(k)).norm());
        }
        for (&k, &c) in &other.coeffs {
            if !self.coeffs.contains_key(&k) {
                m = m.max(c.norm());
            }
        }
        m
    }

    /// JSON record form (canonical half-space only).
    pub fn to_record(&self) -> FieldRecord {
        FieldRecord {
            schema: FIELD_SCHEMA.to_string(),
            nt: self.nt,
            nx: self.nx,
            modes: self
                .iter_canonical()
                .map(|(k, c)| ModeRecord { l: k.l, j: k.j, re: c.re, im: c.im })
                .collect(),
        }
    }

    pub fn from_record(rec: &FieldRecord) -> Result<Self> {
        if rec.schema != FIELD_SCHEMA {
            return Err(Error::Validation(format!("unknown field schema '{}'", rec.schema)));
        }
        let mut u = Self::zero(rec.nt, rec.nx);
        for m in &rec.modes {
            let k = ModeIndex::new(m.l, m.j);
            if !k.is_canonical() {
                return Err(Error::Validation(format!("mode {k} is not in the canonical half-space")));
            }
            if k.l.unsigned_abs() > rec.nt || k.j.unsigned_abs() > rec.nx {
                return Err(Error::Validation(format!("mode {k} outside the declared box")));
            }
            u.set(k, Complex64::new(m.re, m.im));
        }
        Ok(u)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.scale(self)
    }
}

pub const FIELD_SCHEMA: &str = "bo-periodic/field/1";

/// One canonical mode of the field JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub l: i32,
    pub j: i32,
    pub re: f64,
    pub im: f64,
}

/// Field JSON: `{schema, nt, nx, modes: [{l, j, re, im}]}`; only modes with
/// `j > 0` or `j = 0, l >= 0` are listed, the rest follow by conjugation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub schema: String,
    pub nt: u32,
    pub nx: u32,
    pub modes: Vec<ModeRecord>,
}

/// Outcome of projecting one product of kernel modes onto `V`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelProduct {
    pub js: Vec<i32>,
    /// `Pi_V` of the product is nonzero.
    pub in_kernel: bool,
    /// First pair `(a, b)` of positions with `j_a + j_b = 0`.
    pub cancelling_pair: Option<(usize, usize)>,
}

impl KernelProduct {
    pub fn is_counterexample(&self) -> bool {
        self.in_kernel && self.cancelling_pair.is_none()
    }
}

/// Projects `q_{j_1} ... q_{j_n}` onto `V` by index arithmetic.
pub fn classify_kernel_product(js: &[i32]) -> KernelProduct {
    let l: i64 = js.iter().map(|&j| ModeIndex::kernel(j).l as i64).sum();
    let jj: i64 = js.iter().map(|&j| j as i64).sum();
    let in_kernel = l + jj * jj.abs() == 0;
    let mut cancelling_pair = None;
    'outer: for a in 0..js.len() {
        for b in a + 1..js.len() {
            if js[a] + js[b] == 0 {
                cancelling_pair = Some((a, b));
                break 'outer;
            }
        }
    }
    KernelProduct { js: js.to_vec(), in_kernel, cancelling_pair }
}

/// Every product of two or three kernel modes with `1 <= |j_i| <= max_j`
/// whose projection on `V` is nonzero although no pair cancels.
pub fn brute_force_kernel_products(max_j: u32) -> Vec<KernelProduct> {
    let m = max_j as i32;
    let js: Vec<i32> = (-m..=m).filter(|&j| j != 0).collect();
    let mut out = Vec::new();
    for &a in &js {
        for &b in &js {
            let p = classify_kernel_product(&[a, b]);
            if p.is_counterexample() {
                out.push(p);
            }
            for &c in &js {
                let p = classify_kernel_product(&[a, b, c]);
                if p.is_counterexample() {
                    out.push(p);
                }
            }
        }
    }
    out
}

