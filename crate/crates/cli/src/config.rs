use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use mmm_core::Month;
use serde::{Deserialize, Serialize};

pub const DEFAULT_DATA: &str = "data/shiller_monthly.csv";
pub const DEFAULT_OUT: &str = "mmm-out";
pub const DEFAULT_SEED: u64 = 1;

/// Contents of `--config`; every field is optional and command-line flags
/// take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub calibration: CalibrationSection,
    pub model: ModelSection,
    pub valuation: ValuationSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub from: Option<Month>,
    pub to: Option<Month>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub origin: Option<Month>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationSection {
    /// Flat short rate for savings bonds maturing beyond the data.
    pub flat_rate: Option<f64>,
    pub guarantee_rate: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}

/// Model parameter flags shared by every command that prices or simulates.
/// Without `--alpha` and `--eta` the model is fitted on the calibration
/// window.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Month at which model time is zero [default: calibration start]
    #[arg(long)]
    pub origin: Option<Month>,
    /// Black-Scholes volatility; fitted on the calibration window when absent
    #[arg(long)]
    pub theta: Option<f64>,
    /// Calibration window start [default: 1871-01]
    #[arg(long)]
    pub calib_from: Option<Month>,
    /// Calibration window end [default: 1932-01]
    #[arg(long)]
    pub calib_to: Option<Month>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

impl ModelArgs {
    /// Folds these flags over `config`, flags winning.
    pub fn apply(&self, config: &mut RunConfig) {
        let m = &mut config.model;
        m.alpha = self.alpha.or(m.alpha);
        m.eta = self.eta.or(m.eta);
        m.origin = self.origin.or(m.origin);
        m.theta = self.theta.or(m.theta);
        let c = &mut config.calibration;
        c.from = self.calib_from.or(c.from);
        c.to = self.calib_to.or(c.to);
        c.tol = self.tol.or(c.tol);
        c.max_iter = self.max_iter.or(c.max_iter);
    }
}

/// Fills every default so the manifest records exactly what ran.
pub fn resolve_defaults(config: &mut RunConfig) {
    config.data.get_or_insert_with(|| PathBuf::from(DEFAULT_DATA));
    config.out.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT));
    config.seed.get_or_insert(DEFAULT_SEED);
    let c = &mut config.calibration;
    c.from.get_or_insert(Month::new(1871, 1).unwrap());
    c.to.get_or_insert(Month::new(1932, 1).unwrap());
    c.tol.get_or_insert(1e-8);
    c.max_iter.get_or_insert(100);
    if config.model.alpha.is_some() && config.model.origin.is_none() {
        config.model.origin = c.from;
    }
}
