//! Effective run configuration: flags override a JSON config file, which
//! overrides built-in defaults. The environment variable
//! `EVMANIFOLD_QUAD_NODES` sits between the file and the flags.

use std::fs;
use std::path::Path;

use evmanifold::manifold::{default_q_grid, default_x_grid};
use evmanifold::spectral::quad::{DEFAULT_NODES, MIN_NODES};
use evmanifold::spectral::DEFAULT_THRESHOLD;
use evmanifold::tstationary::Seasonality;
use evmanifold::{BlockPeriod, PosteriorConfig, SolverConfig, TsConfig};
use serde::{Deserialize, Serialize};

use crate::args::{BlockArg, TsArgs};
use crate::error::CliError;

pub const QUAD_NODES_ENV: &str = "EVMANIFOLD_QUAD_NODES";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Radial threshold level, in (0.5, 1).
    pub threshold: f64,
    pub quad_nodes: usize,
    pub solver: SolverConfig,
    pub ts: TsConfig,
    pub block: Option<BlockPeriod>,
    /// Parameter count of the semiparametric model in AIC/BIC.
    pub semiparam_k: usize,
    pub mcmc_iters: usize,
    pub burnin: usize,
    pub q_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub label: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let post = PosteriorConfig::default();
        Self {
            seed: 1,
            threshold: DEFAULT_THRESHOLD,
            quad_nodes: DEFAULT_NODES,
            solver: SolverConfig::default(),
            ts: TsConfig::default(),
            block: None,
            semiparam_k: 1,
            mcmc_iters: post.iters,
            burnin: post.burnin,
            q_grid: default_q_grid(),
            x_grid: default_x_grid(),
            label: "run".into(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional config file, then the environment.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                    context: format!("reading config {}", p.display()),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("config {} is not valid: {e}", p.display()))
                })?
            }
        };
        if let Ok(v) = std::env::var(QUAD_NODES_ENV) {
            cfg.quad_nodes = v.trim().parse().map_err(|_| {
                CliError::Usage(format!("{QUAD_NODES_ENV} must be a positive integer, got {v:?}"))
            })?;
        }
        Ok(cfg)
    }

    pub fn apply_ts(&mut self, ts: &TsArgs) {
        if let Some(v) = ts.window_years {
            self.ts.window_years = v;
        }
        if let Some(v) = ts.short_window_days {
            self.ts.short_window_days = v;
        }
        if let Some(v) = ts.smoothing_divisor {
            self.ts.smoothing_divisor = v;
        }
        if ts.extra_smoothing {
            self.ts.extra_smoothing = true;
        }
        if ts.no_seasonality {
            self.ts.seasonality = Seasonality::Off;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(CliError::Usage(format!(
                "threshold must lie in (0.5, 1), got {}",
                self.threshold
            )));
        }
        if self.quad_nodes < MIN_NODES {
            return Err(CliError::Usage(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {}",
                self.quad_nodes
            )));
        }
        if self.semiparam_k < 1 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        if self.mcmc_iters <= self.burnin {
            return Err(CliError::Usage(format!(
                "MCMC iterations ({}) must exceed burn-in ({})",
                self.mcmc_iters, self.burnin
            )));
        }
        check_q_grid(&self.q_grid)?;
        check_x_grid(&self.x_grid)?;
        self.ts.validate().map_err(CliError::usage)?;
        self.solver.validate().map_err(CliError::usage)?;
        Ok(())
    }

    pub fn posterior(&self) -> PosteriorConfig {
        PosteriorConfig {
            iters: self.mcmc_iters,
            burnin: self.burnin,
            seed: self.seed,
            ..PosteriorConfig::default()
        }
    }
}

pub fn block_period(b: BlockArg) -> BlockPeriod {
    match b {
        BlockArg::Month => BlockPeriod::Month,
        BlockArg::Year => BlockPeriod::Year,
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: {t:?} is not a number")))
        })
        .collect()
}

pub fn check_q_grid(q: &[f64]) -> Result<(), CliError> {
    if q.is_empty() {
        return Err(CliError::Usage("the q grid is empty".into()));
    }
    if q.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(CliError::Usage("q grid values must lie in (0, 1)".into()));
    }
    if q.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("q grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn check_x_grid(x: &[f64]) -> Result<(), CliError> {
    if x.is_empty() {
        return Err(CliError::Usage("the x grid is empty".into()));
    }
    if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(CliError::Usage("x grid values must be positive".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("x grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"threshold": 0.95, "ts": {"window_years": 10}}"#).unwrap();
        assert_eq!(cfg.threshold, 0.95);
        assert_eq!(cfg.ts.window_years, 10.0);
        assert_eq!(cfg.ts.short_window_days, TsConfig::default().short_window_days);
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"treshold": 0.95}"#).is_err());
    }

    #[test]
    fn threshold_range() {
        let mut cfg = RunConfig::default();
        cfg.threshold = 0.5;
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        cfg.threshold = 0.9;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("--q-grid", "0.1, 0.5,0.9").unwrap(), vec![0.1, 0.5, 0.9]);
        assert!(parse_list("--q-grid", "").unwrap().is_empty());
        assert!(parse_list("--q-grid", "0.1,x").is_err());
        assert!(check_q_grid(&[]).is_err());
        assert!(check_q_grid(&[0.5, 0.4]).is_err());
    }
}
