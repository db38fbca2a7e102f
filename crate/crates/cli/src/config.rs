//! Optional TOML configuration file. Keys mirror the long flags of the
//! subcommands (with underscores); explicit command-line flags always win.
//! Keys that do not apply to the invoked subcommand are ignored, but unknown
//! keys are rejected so typos fail loudly.

use crate::CliError;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub response: Option<String>,
    pub loss: Option<String>,
    pub order: Option<usize>,
    pub interactions: Option<usize>,
    pub knots: Option<usize>,
    pub projection: Option<String>,
    pub rho_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub grid_min_ratio: Option<f64>,
    pub validation: Option<PathBuf>,
    pub folds: Option<usize>,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub covariates: Option<Vec<String>>,
    pub points: Option<usize>,
    pub scenario: Option<String>,
    pub reps: Option<usize>,
    pub n_train: Option<usize>,
    pub variants: Option<Vec<String>>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}
