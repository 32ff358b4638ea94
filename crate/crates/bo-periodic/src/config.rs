//! Flat run configuration.
//!
//! A config file is TOML with top-level keys only, for example
//!
//! ```toml
//! modes = [2, 3]
//! nonlinearity = "zero"
//! eps = 0.03
//! n_cap = 32
//! ```
//!
//! Every key is optional; command-line flags override the file and the
//! documented defaults fill the rest. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifurcation::{build_v1, validate_mode_set, BifurcationData};
use crate::cantor::ScanConfig;
use crate::error::{Error, Result};
use crate::nash_moser::IterationConfig;
use crate::nonlinearity::NonlinearitySpec;

pub const DEFAULT_MODES: [i64; 2] = [2, 3];
pub const DEFAULT_NONLINEARITY: &str = "zero";
pub const DEFAULT_EPS: f64 = 0.03;

/// All keys of the file; `None` means "not given".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Option<Vec<i64>>,
    /// One sign per mode (default all `+1`).
    pub signs: Option<Vec<i8>>,
    pub nonlinearity: Option<String>,
    pub eps: Option<f64>,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub refine_bad: Option<bool>,
    pub probe_predicted: Option<bool>,
    pub a_bar: Option<f64>,
    pub chi: Option<f64>,
    pub n_cap: Option<u32>,
    pub max_steps: Option<usize>,
    pub tol_residual: Option<f64>,
    pub s_norm: Option<f64>,
    pub check_identities: Option<bool>,
    /// Largest `|j|` of the exclusion-width table (default `n_cap`).
    pub j_max: Option<u32>,
    pub out_dir: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// `self` with every key set in `top` replaced.
    pub fn overridden_by(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, modes, signs, nonlinearity, eps, eps_min, eps_max, grid_points, refine_bad, probe_predicted,
            a_bar, chi, n_cap, max_steps, tol_residual, s_norm, check_identities, j_max, out_dir
        );
        self
    }

    pub fn modes(&self) -> Vec<i64> {
        self.modes.clone().unwrap_or_else(|| DEFAULT_MODES.to_vec())
    }

    pub fn bifurcation(&self) -> Result<BifurcationData> {
        let modes = self.modes();
        let set = validate_mode_set(&modes).map_err(|r| Error::Validation(format!("modes {modes:?}: {r}")))?;
        let signs = self.signs.clone().unwrap_or_else(|| vec![1; modes.len()]);
        build_v1(&set, &signs)
    }

    pub fn spec(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::catalog(self.nonlinearity.as_deref().unwrap_or(DEFAULT_NONLINEARITY))
    }

    pub fn nonlinearity_name(&self) -> String {
        self.nonlinearity.clone().unwrap_or_else(|| DEFAULT_NONLINEARITY.into())
    }

    pub fn eps(&self) -> Result<f64> {
        let e = self.eps.unwrap_or(DEFAULT_EPS);
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::Validation("eps must be positive".into()));
        }
        Ok(e)
    }

    pub fn solver(&self) -> Result<IterationConfig> {
        self.solver_over(IterationConfig::default())
    }

    fn solver_over(&self, d: IterationConfig) -> Result<IterationConfig> {
        let cfg = IterationConfig {
            a_bar: self.a_bar.unwrap_or(d.a_bar),
            chi: self.chi.unwrap_or(d.chi),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            n_cap: self.n_cap.unwrap_or(d.n_cap),
            tol_residual: self.tol_residual.unwrap_or(d.tol_residual),
            s_norm: self.s_norm.unwrap_or(d.s_norm),
            check_identities: self.check_identities.unwrap_or(d.check_identities),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scan(&self) -> Result<ScanConfig> {
        let d = ScanConfig::default();
        let cfg = ScanConfig {
            eps_min: self.eps_min.unwrap_or(d.eps_min),
            eps_max: self.eps_max.unwrap_or(d.eps_max),
            grid_points: self.grid_points.unwrap_or(d.grid_points),
            solver: self.solver_over(d.solver.clone())?,
            refine_bad: self.refine_bad.unwrap_or(d.refine_bad),
            probe_predicted: self.probe_predicted.unwrap_or(d.probe_predicted),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_toml("modes = [2, 3]\neps = 0.02\nn_cap = 20\n").unwrap();
        let flags = RunConfig { eps: Some(0.04), ..Default::default() };
        let cfg = file.overridden_by(&flags);
        assert_eq!(cfg.eps().unwrap(), 0.04);
        assert_eq!(cfg.solver().unwrap().n_cap, 20);
        assert_eq!(cfg.nonlinearity_name(), "zero");
    }

    #[test]
    fn unknown_keys_and_bad_values_are_validation_errors() {
        assert!(RunConfig::from_toml("epsilon = 0.1").unwrap_err().is_validation());
        assert!(RunConfig::from_toml("eps = \"big\"").unwrap_err().is_validation());
        let bad = RunConfig { modes: Some(vec![3, 2]), ..Default::default() };
        assert!(bad.bifurcation().unwrap_err().is_validation());
        let bad = RunConfig { eps: Some(-1.0), ..Default::default() };
        assert!(bad.eps().unwrap_err().is_validation());
    }
}
