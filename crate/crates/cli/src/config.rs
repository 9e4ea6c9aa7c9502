//! Optional TOML run configuration. Command-line flags take precedence over
//! file values, which take precedence over built-in defaults.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub alpha: Option<f64>,
    pub grid_m1: Option<Vec<f64>>,
    pub grid_m2: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub n_mc: Option<usize>,
    pub threads: Option<usize>,
    pub h: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub c0: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input("reading config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input("reading config", format!("{}: {e}", path.display())))
    }
}

/// Flag value if given, else the file value.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}
