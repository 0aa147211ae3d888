use std::fs;
use std::path::Path;

use evmanifold::selection::FittedModel;
use evmanifold::{ModelScore, Ranking};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILURE_MARKER: &str = "FAILED";

/// Outcome of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub sigma_mean: f64,
    pub acceptance_rate: f64,
    pub draws: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

/// Everything a downstream command needs without re-fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub status: String,
    pub inputs: Inputs,
    /// SHA-256 over the two input files, x first.
    pub fingerprint: String,
    /// Pairs after stationarizing and optional blocking.
    pub n: usize,
    /// Pairs entering the likelihood.
    pub k: usize,
    /// `exceedances` above the radial threshold, or `all` for block maxima.
    pub fit_pairs: String,
    pub radial_threshold: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub loglik: Option<f64>,
    /// `∫ w h(w) dw` at σ̂; 1/2 up to quadrature error.
    pub spectral_mean: Option<f64>,
    pub posterior: Option<PosteriorSummary>,
    pub fitted: Vec<FittedModel>,
    pub scores: Vec<ModelScore>,
    pub ranking: Option<Ranking>,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub x: String,
    pub y: String,
}

impl RunSummary {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading summary {}", path.display()),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{} is not a run summary: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn is_complete(&self) -> bool {
        self.status == "complete"
    }
}
