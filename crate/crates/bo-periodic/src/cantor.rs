//! Parameter scans and the measure mechanics of the excluded set.
//!
//! A scan runs the solver on a grid of `eps`, classifies each point as good
//! (converged) or bad (a Diophantine witness appeared along the iteration),
//! and optionally bisects status changes. This is a finite-depth picture of
//! the good set: every run stops after finitely many steps at a capped
//! truncation, so only the exclusions with `|j| <= N_cap` are seen.
//!
//! [`exclusion_widths`] works with the normal form of the 0-th iterate
//! `u = v2(eps)` as a function of `eps`. Its scalars are smooth in `eps`, so
//! they are sampled once at Chebyshev nodes and interpolated; every
//! `(l, j)` bad interval is then located by bisection on the interpolant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{build_v2, BifurcationData};
use crate::descent::NormalForm;
use crate::error::{Error, Result};
use crate::inversion::{in_window, threshold};
use crate::nash_moser::{IterationConfig, Problem, Status};
use crate::nonlinearity::NonlinearitySpec;
use crate::stack::Stack;

/// Depth of the bisection of a status change.
pub const BISECTION_DEPTH: u32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub eps_min: f64,
    pub eps_max: f64,
    pub grid_points: usize,
    pub solver: IterationConfig,
    /// Bisect every good/bad transition to `spacing / 2^10`.
    pub refine_bad: bool,
    /// Also run the solver at the centres of the predicted 0-th order
    /// exclusions with `|j| <= N_cap` (and just outside them). Probes never
    /// enter the good fraction.
    pub probe_predicted: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            eps_min: 0.005,
            eps_max: 0.05,
            grid_points: 200,
            solver: IterationConfig { n_cap: 16, ..Default::default() },
            refine_bad: true,
            probe_predicted: true,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min > 0.0 && self.eps_min < self.eps_max) {
            return Err(Error::Validation("need 0 < eps_min < eps_max".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Validation("grid_points must be at least 2".into()));
        }
        self.solver.validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n).map(|i| self.eps_min + (self.eps_max - self.eps_min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub status: Status,
    pub witness: Option<(i64, i64)>,
    /// Smallest `|lambda| / threshold` over the completed steps.
    pub min_margin: f64,
    pub final_residual: f64,
    pub steps: usize,
    pub probe: bool,
    pub failure: Option<String>,
}

impl EpsRecord {
    pub fn is_good(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn is_bad(&self) -> bool {
        self.status == Status::DiophantineFail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BadInterval {
    /// Innermost bad parameters found; the true edges lie within
    /// `resolution` outside.
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
    pub witness: (i64, i64),
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub eps0: f64,
    pub points: usize,
    pub good_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub approximation: String,
    pub per_eps: Vec<EpsRecord>,
    pub bad_intervals: Vec<BadInterval>,
    /// Fraction of grid points (probes excluded) that converged.
    pub good_fraction: f64,
    pub trend: Vec<TrendRow>,
}

/// Runs the solver at one parameter. Failures are data.
pub fn classify(data: &BifurcationData, spec: &NonlinearitySpec, solver: &IterationConfig, eps: f64, probe: bool) -> EpsRecord {
    let p = Problem { spec, data, eps, cfg: solver.clone() };
    match p.run() {
        Ok(st) => {
            let min_margin = st.history.iter().map(|r| r.margin).filter(|m| !m.is_nan()).fold(f64::INFINITY, f64::min);
            EpsRecord {
                eps,
                status: st.status,
                witness: st.witness,
                min_margin,
                final_residual: st.final_residual(),
                steps: st.n,
                probe,
                failure: st.failure.clone(),
            }
        }
        Err(e) => EpsRecord {
            eps,
            status: Status::Diverged,
            witness: None,
            min_margin: f64::NAN,
            final_residual: f64::NAN,
            steps: 0,
            probe,
            failure: Some(e.to_string()),
        },
    }
}

fn by_eps(a: &EpsRecord, b: &EpsRecord) -> std::cmp::Ordering {
    a.eps.total_cmp(&b.eps)
}

pub fn scan(cfg: &ScanConfig, data: &BifurcationData, spec: &NonlinearitySpec) -> Result<ScanReport> {
    cfg.validate()?;
    let grid = cfg.grid();
    let mut points: Vec<(f64, bool)> = grid.iter().map(|&e| (e, false)).collect();
    if cfg.probe_predicted {
        let wc = WidthConfig {
            eps_min: cfg.eps_min,
            eps_max: cfg.eps_max,
            j_max: cfg.solver.n_cap,
            box_a: n_box(data),
            nodes: DEFAULT_NODES,
        };
        let table = exclusion_widths(data, spec, &wc)?;
        for r in table.rows.iter().filter(|r| !r.clipped) {
            for off in [-1.5, 0.0, 1.5] {
                let e = r.eps_centre + off * r.width;
                if e > cfg.eps_min && e < cfg.eps_max {
                    points.push((e, true));
                }
            }
        }
    }
    let mut records: Vec<EpsRecord> =
        points.par_iter().map(|&(e, probe)| classify(data, spec, &cfg.solver, e, probe)).collect();
    records.sort_by(by_eps);

    let spacing = (cfg.eps_max - cfg.eps_min) / (cfg.grid_points - 1) as f64;
    let mut refined = Vec::new();
    if cfg.refine_bad {
        let pairs: Vec<(EpsRecord, EpsRecord)> = records
            .windows(2)
            .filter(|w| w[0].is_bad() != w[1].is_bad() && (w[0].is_bad() || w[1].is_bad()))
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        refined = pairs.par_iter().flat_map_iter(|(a, b)| bisect(data, spec, &cfg.solver, a, b)).collect();
    }
    records.extend(refined);
    records.sort_by(by_eps);
    records.dedup_by(|a, b| a.eps == b.eps);

    let bad_intervals = bad_intervals(&records, spacing / f64::from(1u32 << BISECTION_DEPTH));
    let on_grid: Vec<&EpsRecord> = records.iter().filter(|r| !r.probe).collect();
    let good = |rs: &[&EpsRecord]| rs.iter().filter(|r| r.is_good()).count() as f64 / rs.len().max(1) as f64;
    let trend = (1..=10)
        .map(|k| {
            let m = (k * on_grid.len()).div_ceil(10).max(2).min(on_grid.len());
            TrendRow { eps0: on_grid[m - 1].eps, points: m, good_fraction: good(&on_grid[..m]) }
        })
        .collect();
    Ok(ScanReport {
        approximation: format!(
            "finite depth: at most {} steps, Diophantine checks on |j| <= {}",
            cfg.solver.max_steps, cfg.solver.n_cap
        ),
        good_fraction: good(&on_grid),
        per_eps: records,
        bad_intervals,
        trend,
    })
}

/// Bisects the status change between neighbours `a < b`; returns the
/// records of the midpoints (marked as probes, so they stay out of the
/// grid statistics).
fn bisect(
    data: &BifurcationData,
    spec: &NonlinearitySpec,
    solver: &IterationConfig,
    a: &EpsRecord,
    b: &EpsRecord,
) -> Vec<EpsRecord> {
    let (mut lo, mut hi) = (a.clone(), b.clone());
    let mut out = Vec::new();
    for _ in 0..BISECTION_DEPTH {
        let mid = classify(data, spec, solver, 0.5 * (lo.eps + hi.eps), true);
        if mid.is_bad() == lo.is_bad() {
            lo = mid.clone();
        } else {
            hi = mid.clone();
        }
        out.push(mid);
    }
    out
}

/// Maximal runs of bad records sharing a witness.
fn bad_intervals(records: &[EpsRecord], resolution: f64) -> Vec<BadInterval> {
    let mut out: Vec<BadInterval> = Vec::new();
    let mut open = false;
    for r in records {
        if !r.is_bad() {
            open = false;
            continue;
        }
        let w = r.witness.unwrap_or((0, 0));
        match out.last_mut() {
            Some(last) if open && last.witness == w => last.hi = r.eps,
            _ => out.push(BadInterval { lo: r.eps, hi: r.eps, resolution, witness: w }),
        }
        open = true;
    }
    out
}

// ---------------------------------------------------------------------------
// Exclusion widths at 0-th order

pub const DEFAULT_NODES: usize = 16;

/// Ambient box for the 0-th order normal form: the support of `v1` and its
/// cube.
pub fn n_box(data: &BifurcationData) -> u32 {
    data.modes.min_box().max(12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthConfig {
    pub eps_min: f64,
    pub eps_max: f64,
    pub j_max: u32,
    pub box_a: u32,
    pub nodes: usize,
}

/// Chebyshev interpolant of the normal-form scalars on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct NormalFormCurve {
    pub lo: f64,
    pub hi: f64,
    xs: Vec<f64>,
    vals: Vec<[f64; 5]>,
}

fn pack(nf: &NormalForm) -> [f64; 5] {
    [nf.omega, nf.mu2, nf.mu1, nf.mu0, nf.mu_m2]
}

fn unpack(v: [f64; 5]) -> NormalForm {
    NormalForm { omega: v[0], mu2: v[1], mu1: v[2], mu0: v[3], mu_m2: v[4] }
}

/// Normal form of the stack at `u = v2(eps)`.
pub fn zeroth_normal_form(data: &BifurcationData, spec: &NonlinearitySpec, eps: f64, box_a: u32) -> Result<NormalForm> {
    let v2 = build_v2(data, spec, eps, box_a)?;
    Ok(Stack::build(spec, data, &v2, eps, box_a)?.nf)
}

impl NormalFormCurve {
    pub fn sample(data: &BifurcationData, spec: &NonlinearitySpec, lo: f64, hi: f64, nodes: usize, box_a: u32) -> Result<Self> {
        let n = nodes.max(2) - 1;
        let xs: Vec<f64> = (0..=n)
            .map(|k| 0.5 * (lo + hi) + 0.5 * (hi - lo) * (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let vals = xs
            .par_iter()
            .map(|&e| zeroth_normal_form(data, spec, e, box_a).map(|nf| pack(&nf)))
            .collect::<Result<Vec<_>>>()?;
        Ok(NormalFormCurve { lo, hi, xs, vals })
    }

    /// Barycentric evaluation.
    pub fn at(&self, eps: f64) -> NormalForm {
        let n = self.xs.len() - 1;
        let mut num = [0.0; 5];
        let mut den = 0.0;
        for (k, (&x, v)) in self.xs.iter().zip(&self.vals).enumerate() {
            let d = eps - x;
            if d == 0.0 {
                return unpack(*v);
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                w *= 0.5;
            }
            let c = w / d;
            den += c;
            for i in 0..5 {
                num[i] += c * v[i];
            }
        }
        unpack(num.map(|x| x / den))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WidthRow {
    pub j: i64,
    pub l: i64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_centre: f64,
    pub width: f64,
    pub width_j4: f64,
    /// The interval reaches an end of the range, so its width is partial.
    pub clipped: bool,
    pub in_window: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct JSummary {
    pub j: i64,
    pub count: usize,
    /// `count / (eps0^2 j^2)` with `eps0 = eps_max`.
    pub count_scaled: f64,
    /// `p_j = lambda_{0,j} / omega` is strictly monotone over the range.
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionTable {
    pub eps_min: f64,
    pub eps_max: f64,
    /// Largest interpolation error of the normal form at check points.
    pub interpolation_error: f64,
    pub rows: Vec<WidthRow>,
    pub per_j: Vec<JSummary>,
}

impl ExclusionTable {
    /// `max / min` of `width |j|^4` over unclipped rows with `j` in `range`.
    pub fn width_ratio(&self, range: std::ops::RangeInclusive<i64>) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| !r.clipped && range.contains(&r.j)).map(|r| r.width_j4).collect();
        if v.is_empty() {
            return None;
        }
        let max = v.iter().copied().fold(f64::MIN, f64::max);
        let min = v.iter().copied().fold(f64::MAX, f64::min);
        Some(max / min)
    }
}

/// Root of the monotone `f` on `[a, b]` (assumes a sign change).
fn root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

const SAMPLES: usize = 400;

/// For each `1 <= j <= j_max`, the intervals `{eps : |lambda_{l,j}(eps)| <= 1/(2<j>^3)}`
/// with the normal form of the 0-th iterate.
pub fn exclusion_widths(data: &BifurcationData, spec: &NonlinearitySpec, cfg: &WidthConfig) -> Result<ExclusionTable> {
    if !(cfg.eps_min > 0.0 && cfg.eps_min < cfg.eps_max) {
        return Err(Error::Validation("need 0 < eps_min < eps_max".into()));
    }
    let (lo, hi) = (cfg.eps_min, cfg.eps_max);
    let curve = NormalFormCurve::sample(data, spec, lo, hi, cfg.nodes, cfg.box_a)?;
    let checks: Vec<f64> = (0..4).map(|k| lo + (hi - lo) * (0.13 + 0.23 * k as f64)).collect();
    let interpolation_error = checks
        .par_iter()
        .map(|&e| {
            let exact = pack(&zeroth_normal_form(data, spec, e, cfg.box_a)?);
            let approx = pack(&curve.at(e));
            Ok(exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let eps_s: Vec<f64> = (0..SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64).collect();
    let nfs: Vec<NormalForm> = eps_s.iter().map(|&e| curve.at(e)).collect();
    let mut rows = Vec::new();
    let mut per_j = Vec::new();
    for j in 1..=cfg.j_max as i64 {
        let p: Vec<f64> = nfs.iter().map(|nf| nf.frequency(0, j) / nf.omega).collect();
        let d: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        let monotone = d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0);
        let (pmin, pmax) = p.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let thr = threshold(j);
        let mut count = 0;
        for l in (-pmax.ceil() as i64 - 1)..=(-pmin.floor() as i64 + 1) {
            if l + j * j.abs() == 0 {
                continue;
            }
            let lam = |e: f64| curve.at(e).frequency(l, j);
            let (a, b) = (lam(lo), lam(hi));
            // lambda is monotone in eps along with p_j; the bad set is
            // where it lies in [-thr, thr].
            if a.min(b) > thr || a.max(b) < -thr {
                continue;
            }
            let edge = |level: f64| {
                if (a - level) * (b - level) <= 0.0 {
                    Some(root(|e| lam(e) - level, lo, hi))
                } else {
                    None
                }
            };
            let (e1, e2) = (edge(-thr), edge(thr));
            let clipped = e1.is_none() || e2.is_none();
            let inside = |e: f64| lam(e).abs() <= thr;
            let x1 = e1.unwrap_or(if inside(lo) { lo } else { hi });
            let x2 = e2.unwrap_or(if inside(lo) { lo } else { hi });
            let (elo, ehi) = (x1.min(x2), x1.max(x2));
            let centre = 0.5 * (elo + ehi);
            let width = ehi - elo;
            count += 1;
            rows.push(WidthRow {
                j,
                l,
                eps_lo: elo,
                eps_hi: ehi,
                eps_centre: centre,
                width,
                width_j4: width * (j as f64).powi(4),
                clipped,
                in_window: in_window(l, j, centre),
            });
        }
        per_j.push(JSummary { j, count, count_scaled: count as f64 / (hi * hi * (j * j) as f64), monotone });
    }
    Ok(ExclusionTable { eps_min: lo, eps_max: hi, interpolation_error, rows, per_j })
}
