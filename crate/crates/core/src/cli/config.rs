//! Run configuration: defaults, then a JSON config file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schema::{GridSpec, SymbolSpec};
use crate::fit::{Family, Optimizer};
use crate::mmd::{Method, Statistic};

/// Every key is optional; absent keys fall back to the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Inline symbol description.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    /// Path to a symbol description file; takes precedence over `symbol`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_ref: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<Statistic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<Optimizer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Base-noise draws held by the fitted model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(
            base, top, seed, out, grid, symbol, symbol_ref, u, v, data, points, method, statistic, rank, trials,
            timing, family, init, optimizer, budget, noise
        )
    }

    pub fn from_json(text: &str) -> Result<RunConfig, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Input files named by the config that do not exist.
    pub fn missing_inputs(&self) -> Vec<PathBuf> {
        [&self.symbol_ref, &self.u, &self.v, &self.data, &self.points]
            .into_iter()
            .flatten()
            .filter(|p| !p.exists())
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json(r#"{"seed": 0, "trials": 5}"#).unwrap();
        let flags = RunConfig { seed: Some(7), ..Default::default() };
        let cfg = file.overlay(flags);
        assert_eq!(cfg.seed(), 7);
        assert_eq!(cfg.trials, Some(5));
        assert_eq!(RunConfig::default().seed(), 0);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"bandwith": 1.0}"#).unwrap_err();
        assert!(err.contains("bandwith"), "{err}");
    }

    #[test]
    fn fit_config_shape() {
        let cfg = RunConfig::from_json(
            r#"{"family":"gaussian","init":[0,0],"optimizer":"nelder_mead","budget":500,"seed":3,"symbol_ref":"s.json"}"#,
        )
        .unwrap();
        assert_eq!(cfg.family, Some(Family::Gaussian));
        assert_eq!(cfg.optimizer, Some(Optimizer::NelderMead));
        assert_eq!(cfg.missing_inputs(), vec![PathBuf::from("s.json")]);
    }
}
