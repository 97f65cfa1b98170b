//! JSON model presets.
//!
//! ```json
//! {
//!   "grid_T": 285, "n": 1200, "burnin": 1000,
//!   "delta": 0.01,
//!   "alpha": { "bump": 12.0 },
//!   "beta": { "basis": "fourier", "coefs": [[0.2, 0.0], [0.0, 0.1]] },
//!   "innovation": { "kind": "ou_bridge", "rate": 200.0, "seed": 0 }
//! }
//! ```
//!
//! `delta` is a constant or `{ "basis": kind, "coefs": [...] }`; kernels are
//! `{ "bump": c }` for `c·t(1−t)s(1−s)` or a coefficient matrix in a basis.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{make_basis, reconstruct_curve, reconstruct_kernel, BasisKind};
use crate::error::{Error, Result};
use crate::function_space::{Curve, Grid, Kernel2D};
use crate::model::{FGarchSpec, InnovationGen};

pub const PAPER_SIM: &str = include_str!("../../../presets/paper_sim.json");

/// Built-in presets by name.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "paper_sim" => Some(PAPER_SIM),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DeltaSpec {
    Constant(f64),
    Coefficients { basis: BasisKind, coefs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum KernelSpec {
    Bump { bump: f64 },
    Coefficients { basis: BasisKind, coefs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    #[serde(rename = "grid_T")]
    pub grid_t: usize,
    pub n: usize,
    pub burnin: usize,
    pub delta: DeltaSpec,
    pub alpha: KernelSpec,
    pub beta: KernelSpec,
    pub innovation: InnovationGen,
}

impl Preset {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// A built-in name or else a path to a JSON file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match builtin(name_or_path) {
            Some(text) => Self::from_json(text),
            None => Self::from_path(name_or_path),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_t)
    }

    /// The model on the preset grid.
    pub fn spec(&self) -> Result<FGarchSpec> {
        self.spec_on(self.grid()?)
    }

    /// The model discretized on another grid.
    pub fn spec_on(&self, grid: Grid) -> Result<FGarchSpec> {
        let delta = match &self.delta {
            DeltaSpec::Constant(c) => Curve::constant(grid, *c),
            DeltaSpec::Coefficients { basis, coefs } => {
                reconstruct_curve(coefs, &make_basis(*basis, coefs.len(), grid)?)?
            }
        };
        FGarchSpec::new(delta, kernel(&self.alpha, grid)?, kernel(&self.beta, grid)?)
    }
}

fn kernel(spec: &KernelSpec, grid: Grid) -> Result<Kernel2D> {
    match spec {
        KernelSpec::Bump { bump } => Ok(Kernel2D::from_fn(grid, |t, s| bump * t * (1.0 - t) * s * (1.0 - s))),
        KernelSpec::Coefficients { basis, coefs } => {
            let m = coefs.len();
            if m == 0 || coefs.iter().any(|r| r.len() != m) {
                return Err(Error::Dimension("kernel coefficients must form a nonempty square matrix".into()));
            }
            let c = DMatrix::from_fn(m, m, |i, j| coefs[i][j]);
            reconstruct_kernel(&c, &make_basis(*basis, m, grid)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_preset_file_matches_builtin_model() {
        let p = Preset::load("paper_sim").unwrap();
        assert_eq!((p.grid_t, p.burnin), (285, 1000));
        let spec = p.spec().unwrap();
        let reference = FGarchSpec::paper_preset(p.grid().unwrap());
        assert_eq!(spec.delta(), reference.delta());
        assert_eq!(spec.alpha(), reference.alpha());
        assert_eq!(spec.beta(), reference.beta());
        assert_eq!(p.innovation, InnovationGen::ou_bridge(200.0, 0));
    }

    #[test]
    fn basis_coefficients_reproduce_bump_closely() {
        let text = r#"{"grid_T": 100, "n": 10, "burnin": 0,
            "delta": {"basis": "bridge", "coefs": [0.009]},
            "alpha": {"basis": "bridge", "coefs": [[0.4]]},
            "beta": {"bump": 12.0},
            "innovation": {"kind": "ou_bridge"}}"#;
        let p = Preset::from_json(text).unwrap();
        let spec = p.spec().unwrap();
        let diff = spec
            .alpha()
            .values()
            .iter()
            .zip(spec.beta().values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-4, "{diff}");
    }

    #[test]
    fn unknown_keys_and_bad_shapes_are_rejected() {
        let base = PAPER_SIM.replace("\"n\": 1200", "\"n\": 1200, \"extra\": 1");
        assert!(matches!(Preset::from_json(&base), Err(Error::Json(_))));
        let bad = PAPER_SIM.replace("{ \"bump\": 12.0 }", "{ \"basis\": \"fourier\", \"coefs\": [[1.0, 0.0]] }");
        let p = Preset::from_json(&bad).unwrap();
        assert!(matches!(p.spec(), Err(Error::Dimension(_))));
        assert!(Preset::load("no/such/preset.json").is_err());
    }
}
