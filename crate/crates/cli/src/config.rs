//! Optional JSON run configuration. Command-line flags take precedence over
//! its entries.

use std::path::{Path, PathBuf};

use fgarch::basis::BasisKind;
use fgarch::Result;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub n: Option<usize>,
    pub n_values: Option<Vec<usize>>,
    #[serde(rename = "grid_T")]
    pub grid_t: Option<usize>,
    pub burnin: Option<usize>,
    pub basis: Option<BasisKind>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub reps: Option<usize>,
    pub cov: Option<bool>,
    pub slots: Option<usize>,
    pub starts: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
            None => Ok(Self::default()),
        }
    }
}
