//! Nash-Moser iteration
//!
//! ```text
//! h_{n+1} = -Pi_{n+1} Psi~ Phi~ (Pi_{n+1} L4~ Pi_{n+1})^{-1} Pi_{n+1} Phi~^{-1} M~^{-1} Psi~^{-1} P_eps F(u_n)
//! ```
//!
//! with truncations `N_n = exp(a chi^n)` clamped to a cap, all operators
//! compressed to the ambient diamond of radius `N_cap`. Once `N_n` reaches
//! the cap the step is exactly Newton's method for `Pi_cap F = 0`.
//!
//! `oracle_newton` solves the same Galerkin problem with dense Jacobians and
//! no change of variables at all; the two must agree.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{build_v2, BifurcationData};
use crate::error::{Error, Result};
use crate::inversion::{dense_matrix, dense_solve, diophantine_check, InversionStats, LsInverse, WMethod};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{KNorm, SpectralField};
use crate::stack::{diamond_modes, galerkin_l, project_box, x_coords, x_field, y_coords, Stack};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationConfig {
    /// `a` in `N_n = exp(a chi^n)`.
    pub a_bar: f64,
    pub chi: f64,
    pub max_steps: usize,
    /// Ambient box and largest truncation.
    pub n_cap: u32,
    pub tol_residual: f64,
    /// Sobolev index of the monitoring norm.
    pub s_norm: f64,
    /// Check the residual and Taylor identities at every step.
    pub check_identities: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            a_bar: 1.2,
            chi: 1.5,
            max_steps: 12,
            n_cap: 32,
            tol_residual: 1e-10,
            s_norm: 0.0,
            check_identities: false,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if !(self.a_bar > 0.0) {
            return bad("a_bar must be positive");
        }
        if !(self.chi > 1.0) {
            return bad("chi must exceed 1");
        }
        if !(self.tol_residual > 0.0) {
            return bad("tol_residual must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if !(self.s_norm >= 0.0) {
            return bad("s_norm must be nonnegative");
        }
        Ok(())
    }
}

const BLOW_UP: f64 = 1e6;

/// Smallest admissible truncation: the support of `v1` (`k_m^2 + k_m`) and
/// at least `3 k_m`.
pub fn n_min(data: &BifurcationData) -> u32 {
    let km = data.modes.k_max();
    (3 * km).max(data.modes.min_box())
}

/// `N_n = min(N_cap, max(N_min + n, floor(exp(a chi^n))))`, strictly
/// increasing until the cap.
pub fn truncation_level(cfg: &IterationConfig, data: &BifurcationData, n: usize) -> u32 {
    let raw = (cfg.a_bar * cfg.chi.powi(n as i32)).exp().floor();
    let floor = (n_min(data) + n as u32) as f64;
    raw.max(floor).min(cfg.n_cap as f64) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    DiophantineFail,
    Diverged,
    MaxSteps,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Converged => "converged",
            Status::DiophantineFail => "diophantine_fail",
            Status::Diverged => "diverged",
            Status::MaxSteps => "max_steps",
        }
    }
}

/// One line of the iteration history. Row `n` describes `u_n`; `h_norm`
/// is `|h_n|` (zero for `n = 0`) and the margin and truncation refer to
/// the step that produced `u_n`.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub truncation: u32,
    /// `|Pi_cap F(u_n)|_s`.
    pub residual: f64,
    pub h_norm: f64,
    /// `min |lambda| / threshold` over the checked set; `NaN` for `n = 0`.
    pub margin: f64,
    pub w_method: Option<WMethod>,
    /// Defect of the residual identity for `r_{n-1}`, relative to `|F(u_0)|`.
    pub rn_defect: Option<f64>,
    /// Defect of `F(u_n) = r_{n-1} + Q(u_{n-1}, h_n)`, relative to `|F(u_0)|`.
    pub taylor_defect: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IterationState {
    pub n: usize,
    pub u: SpectralField,
    pub history: Vec<StepRecord>,
    pub status: Status,
    /// Witness of a failed Diophantine check.
    pub witness: Option<(i64, i64)>,
    pub failure: Option<String>,
}

impl IterationState {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map(|r| r.residual).unwrap_or(f64::NAN)
    }
}

/// Everything one Nash-Moser run needs.
pub struct Problem<'a> {
    pub spec: &'a NonlinearitySpec,
    pub data: &'a BifurcationData,
    pub eps: f64,
    pub cfg: IterationConfig,
}

/// `P_eps f = eps^2 Pi_V f + Pi_W f`.
pub fn p_eps(f: &SpectralField, eps: f64) -> SpectralField {
    f.map_symbol(|k| if k.in_kernel() { (eps * eps).into() } else { 1.0.into() })
}

pub fn p_eps_inv(f: &SpectralField, eps: f64) -> SpectralField {
    f.map_symbol(|k| if k.in_kernel() { (1.0 / (eps * eps)).into() } else { 1.0.into() })
}

/// Outcome of one step.
pub struct StepOutput {
    pub h: SpectralField,
    pub margin: f64,
    pub stats: InversionStats,
    pub rn_defect: Option<f64>,
    pub taylor_defect: Option<f64>,
}

impl Problem<'_> {
    fn norm(&self, u: &SpectralField) -> f64 {
        u.sobolev_norm(self.cfg.s_norm)
    }

    /// `Pi_cap F(u)`.
    pub fn residual(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(project_box(&self.spec.eval_f(self.data, u, self.eps)?, self.cfg.n_cap))
    }

    /// `u_0 = v2(eps)`.
    pub fn initial(&self) -> Result<SpectralField> {
        Ok(project_box(&build_v2(self.data, self.spec, self.eps, self.cfg.n_cap)?, self.cfg.n_cap))
    }

    /// One step at truncation `n_next`. Fails with [`Error::Diophantine`]
    /// when the condition is violated on `|j| <= n_next`. Identity defects
    /// are divided by `scale` (the run uses `|F(u_0)|`, since `F(u_n)` itself
    /// tends to zero).
    pub fn step(&self, u: &SpectralField, n_next: u32, scale: f64) -> Result<StepOutput> {
        let a = self.cfg.n_cap;
        let eps = self.eps;
        let stack = Stack::build(self.spec, self.data, u, eps, a)?;
        let rep = diophantine_check(&stack.nf, n_next);
        if !rep.pass {
            let w = rep.violations[0];
            return Err(Error::Diophantine { l: w.l as i32, j: w.j as i32 });
        }
        let f = self.residual(u)?;
        let c = stack.psi_m_phi_inv(&p_eps(&f, eps))?;
        let inv = LsInverse::new(&stack, n_next)?;
        let (w, stats) = inv.solve(&project_box(&c, n_next))?;
        let full = stack.psi_phi(&w)?;
        let h = project_box(&full, n_next).scale(-1.0);
        let (mut rn_defect, mut taylor_defect) = (None, None);
        if self.cfg.check_identities {
            let scale = scale.max(f64::MIN_POSITIVE);
            let perp = |v: &SpectralField| v.axpy(-1.0, &project_box(v, n_next));
            // r_n = P^{-1} Psi M Phi { Pi^perp c - Pi^perp (L4 - D) w + L4 b }
            let b = stack.psi_phi_inv(&perp(&full))?;
            let inner = perp(&c).axpy(-1.0, &perp(&stack.residual_r(&w)?)).axpy(1.0, &stack.l4(&b)?);
            let rn = p_eps_inv(&stack.psi_m_phi(&inner)?, eps);
            let direct = f.axpy(1.0, &stack.f_prime(&h));
            rn_defect = Some(self.norm(&rn.axpy(-1.0, &direct)) / scale);
            let u_next = u.axpy(1.0, &h);
            let q = project_box(&self.spec.eval_q(self.data, u, &h, eps)?, a);
            let f_next = self.residual(&u_next)?;
            taylor_defect = Some(self.norm(&f_next.axpy(-1.0, &rn.axpy(1.0, &q))) / scale);
        }
        Ok(StepOutput { h, margin: rep.worst.ratio(), stats, rn_defect, taylor_defect })
    }

    /// Iterates from `v2(eps)` until the residual drops below the tolerance,
    /// a Diophantine failure, two consecutive residual increases at full
    /// truncation, a blow-up, or `max_steps`.
    pub fn run(&self) -> Result<IterationState> {
        self.cfg.validate()?;
        if !(self.eps > 0.0) {
            return Err(Error::Validation("eps must be positive".into()));
        }
        if self.cfg.n_cap < n_min(self.data) {
            return Err(Error::Validation(format!("n_cap must be at least {}", n_min(self.data))));
        }
        let u0 = self.initial()?;
        let r0 = self.norm(&self.residual(&u0)?);
        let mut st = IterationState {
            n: 0,
            u: u0,
            history: vec![StepRecord {
                n: 0,
                truncation: truncation_level(&self.cfg, self.data, 0),
                residual: r0,
                h_norm: 0.0,
                margin: f64::NAN,
                w_method: None,
                rn_defect: None,
                taylor_defect: None,
            }],
            status: Status::Running,
            witness: None,
            failure: None,
        };
        let mut increases = 0;
        while st.status == Status::Running {
            if st.final_residual() <= self.cfg.tol_residual {
                st.status = Status::Converged;
                break;
            }
            if st.n >= self.cfg.max_steps {
                st.status = Status::MaxSteps;
                break;
            }
            let n_next = truncation_level(&self.cfg, self.data, st.n + 1);
            let out = match self.step(&st.u, n_next, r0) {
                Ok(o) => o,
                Err(Error::Diophantine { l, j }) => {
                    st.status = Status::DiophantineFail;
                    st.witness = Some((l as i64, j as i64));
                    break;
                }
                Err(e) if e.is_validation() => return Err(e),
                Err(e) => {
                    st.status = Status::Diverged;
                    st.failure = Some(e.to_string());
                    break;
                }
            };
            st.u = st.u.axpy(1.0, &out.h);
            st.n += 1;
            let residual = match self.residual(&st.u) {
                Ok(f) => self.norm(&f),
                Err(e) => {
                    st.status = Status::Diverged;
                    st.failure = Some(e.to_string());
                    break;
                }
            };
            // Below the cap the residual outside the current truncation is
            // untouched, so only count increases once the step is full.
            let full = n_next >= self.cfg.n_cap;
            increases = if full && residual > st.final_residual() { increases + 1 } else { 0 };
            st.history.push(StepRecord {
                n: st.n,
                truncation: n_next,
                residual,
                h_norm: self.norm(&out.h),
                margin: out.margin,
                w_method: Some(out.stats.method),
                rn_defect: out.rn_defect,
                taylor_defect: out.taylor_defect,
            });
            if increases >= 2 {
                st.status = Status::Diverged;
                st.failure = Some("residual increased twice in a row".into());
            } else if !residual.is_finite() || residual > BLOW_UP * r0.max(1.0) {
                st.status = Status::Diverged;
                st.failure = Some(format!("residual blew up to {residual:e}"));
            }
        }
        Ok(st)
    }
}

/// Result of [`oracle_newton`].
#[derive(Clone, Debug)]
pub struct OracleNewton {
    pub u: SpectralField,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Plain Newton on `Pi_N F = 0` over `X_0` in the diamond `N`, with dense
/// Jacobians assembled from the linearization coefficients and a dense solve.
pub fn oracle_newton(spec: &NonlinearitySpec, data: &BifurcationData, eps: f64, n: u32, tol: f64) -> Result<OracleNewton> {
    let modes = diamond_modes(n);
    let mut u = project_box(&build_v2(data, spec, eps, n)?, n);
    let res = |u: &SpectralField| -> Result<SpectralField> { Ok(project_box(&spec.eval_f(data, u, eps)?, n)) };
    let mut f = res(&u)?;
    let mut residuals = vec![f.l2_norm()];
    for it in 1..=30 {
        if *residuals.last().expect("nonempty") <= tol {
            return Ok(OracleNewton { u, residuals, iterations: it - 1 });
        }
        let lin = spec.linearize_in_box(data, &u, eps, n)?;
        let jac = dense_matrix(&modes, n, |e| Ok(galerkin_l(&lin, e, n, true)))?;
        let (dx, _) = dense_solve(&jac, &y_coords(&f, &modes))?;
        let x = DVector::from_vec(x_coords(&u, &modes)) - DVector::from_vec(dx);
        u = x_field(&modes, x.as_slice(), n);
        f = res(&u)?;
        residuals.push(f.l2_norm());
        let k = residuals.len();
        if k >= 3 && residuals[k - 1] > residuals[k - 2] && residuals[k - 2] > residuals[k - 3] {
            return Err(Error::Neumann { what: "oracle Newton", ratio: residuals[k - 1] / residuals[k - 2] });
        }
    }
    Err(Error::Neumann { what: "oracle Newton", ratio: f64::NAN })
}

/// `|Pi_N u|_{s+a} <= N^a |u|_s` and `|Pi_N^perp u|_s <= N^{-a} |u|_{s+a}`
/// with `<k> = max(1, |l| + |j|)`. Returns the two ratios (each must be `<= 1`).
pub fn smoothing_ratios(u: &SpectralField, n: u32, s: f64, a: f64) -> (f64, f64) {
    let lo = project_box(u, n);
    let mut hi = u.axpy(-1.0, &lo);
    hi.set(crate::ModeIndex::ZERO, 0.0.into());
    let nf = n as f64;
    let norm = |v: &SpectralField, s: f64| v.sobolev_norm_with(s, KNorm::L1);
    let r1 = norm(&lo, s + a) / (nf.powf(a) * norm(u, s)).max(f64::MIN_POSITIVE);
    let r2 = norm(&hi, s) / (nf.powf(-a) * norm(u, s + a)).max(f64::MIN_POSITIVE);
    (r1, r2)
}

/// Least-squares slope of `log |h_{n+1}|` against `log |h_n|` over the
/// consecutive pairs of `h` above `floor`.
pub fn decay_slope(h: &[f64], floor: f64) -> Option<f64> {
    let tail: Vec<f64> = h.iter().copied().filter(|&x| x > floor).collect();
    if tail.len() < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = tail.windows(2).map(|w| (w[0].ln(), w[1].ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `u_eps = eps v1 + eps^2 u`, the solution of the original equation.
pub fn physical_solution(data: &BifurcationData, u: &SpectralField, eps: f64) -> SpectralField {
    data.v1.scale(eps).axpy(eps * eps, u)
}

/// `|omega U_t + H U_xx + N(U)|` for `U = eps v1 + eps^2 u`, `omega = 1 + 3 eps^2`,
/// with no truncation of the output.
pub fn original_residual(spec: &NonlinearitySpec, data: &BifurcationData, u: &SpectralField, eps: f64) -> Result<f64> {
    let big_u = physical_solution(data, u, eps);
    Ok(spec.eval_raw(&big_u, 1.0 + 3.0 * eps * eps)?.l2_norm())
}
