use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected parameters `(d, A, B)`.
///
/// Flattened as `d`, then `A` row-major, then `B` row-major, which gives a
/// vector of length `M + 2M²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub d: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Theta {
    pub fn new(d: DVector<f64>, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let m = d.len();
        if m == 0 || a.shape() != (m, m) || b.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "d has length {m} but A is {:?} and B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let t = Self { d, a, b };
        if !t.to_flat().iter().all(|v| v.is_finite()) {
            return Err(Error::Argument("parameters must be finite".into()));
        }
        Ok(t)
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            d: DVector::zeros(m),
            a: DMatrix::zeros(m, m),
            b: DMatrix::zeros(m, m),
        }
    }

    /// `M = 1` parameters `(d₁, a₁₁, b₁₁)`.
    pub fn scalar(d: f64, a: f64, b: f64) -> Self {
        Self {
            d: DVector::from_element(1, d),
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
        }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of free parameters, `M + 2M²`.
    pub fn n_params(&self) -> usize {
        param_count(self.dim())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let m = self.dim();
        let mut v = Vec::with_capacity(param_count(m));
        v.extend(self.d.iter());
        for mat in [&self.a, &self.b] {
            for r in 0..m {
                v.extend((0..m).map(|c| mat[(r, c)]));
            }
        }
        v
    }

    pub fn from_flat(m: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != param_count(m) {
            return Err(Error::Dimension(format!(
                "expected {} parameters for M = {m}, got {}",
                param_count(m),
                flat.len()
            )));
        }
        let d = DVector::from_column_slice(&flat[..m]);
        let a = DMatrix::from_row_slice(m, m, &flat[m..m + m * m]);
        let b = DMatrix::from_row_slice(m, m, &flat[m + m * m..]);
        Self::new(d, a, b)
    }

    /// Conjugates by the diagonal sign matrix `S`: `(Sd, SAS, SBS)`.
    pub(crate) fn conjugate_signs(&self, signs: &[f64]) -> Self {
        let m = self.dim();
        Self {
            d: DVector::from_fn(m, |i, _| signs[i] * self.d[i]),
            a: DMatrix::from_fn(m, m, |i, j| signs[i] * signs[j] * self.a[(i, j)]),
            b: DMatrix::from_fn(m, m, |i, j| signs[i] * signs[j] * self.b[(i, j)]),
        }
    }
}

pub(crate) fn param_count(m: usize) -> usize {
    m + 2 * m * m
}

/// The compact parameter set: `|det A| ≥ c1`, `‖B‖_F ≤ c2`, and every entry
/// of `(d, A, B)` within `[-box_bound, box_bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaBounds {
    pub c1: f64,
    pub c2: f64,
    #[serde(default = "default_box")]
    pub box_bound: f64,
}

fn default_box() -> f64 {
    10.0
}

impl Default for ThetaBounds {
    fn default() -> Self {
        Self {
            c1: 1e-6,
            c2: 0.98,
            box_bound: default_box(),
        }
    }
}

impl ThetaBounds {
    pub fn new(c1: f64, c2: f64, box_bound: f64) -> Result<Self> {
        let b = Self { c1, c2, box_bound };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::Argument(format!("c1 must be positive, got {}", self.c1)));
        }
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(Error::Argument(format!("c2 must lie in (0, 1), got {}", self.c2)));
        }
        if !(self.box_bound > 0.0 && self.box_bound.is_finite()) {
            return Err(Error::Argument(format!(
                "box bound must be positive, got {}",
                self.box_bound
            )));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &Theta) -> bool {
        theta.a.determinant().abs() >= self.c1
            && theta.b.norm() <= self.c2 * (1.0 + 1e-12)
            && theta.to_flat().iter().all(|v| v.abs() <= self.box_bound)
    }
}
