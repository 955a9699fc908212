//! Optional TOML settings file.

use std::path::Path;

use coflow_core::lp::SolverOptions;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Read(String, std::io::Error),
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub lp: LpConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub feas_tol: Option<f64>,
    pub opt_tol: Option<f64>,
    pub iter_cap: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn solver(&self) -> SolverOptions {
        let mut s = SolverOptions::default();
        if let Some(t) = self.lp.feas_tol {
            s.feas_tol = t;
        }
        if let Some(t) = self.lp.opt_tol {
            s.opt_tol = t;
        }
        if let Some(n) = self.lp.iter_cap {
            s.iter_cap = n;
        }
        s
    }
}
