use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::recursion::{walk_with_jacobians, CoefSeries};
use super::theta::Theta;
use crate::error::{Error, Result};

/// Condition number of `Q̂` above which the covariance is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Middle factor of the sandwich `Q̂⁻¹ · Ω̂ · Q̂⁻¹ / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichForm {
    /// `Ω̂ = (1/n) Σ Jᵢᵀ rᵢ rᵢᵀ Jᵢ`, the outer product of per-observation
    /// scores. Full rank whenever `Q̂` is.
    #[default]
    Robust,
    /// `Ω̂ = Ĥᵀ Ĵ Ĥ` with `Ĥ = (1/n) Σ Jᵢ`, `Ĵ = (1/n) Σ rᵢ rᵢᵀ`. Its rank is at
    /// most `M`, so for `M < M + 2M²` parameters some directions get zero
    /// variance.
    Plugin,
}

impl std::str::FromStr for SandwichForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(Self::Robust),
            "plugin" => Ok(Self::Plugin),
            _ => Err(Error::Argument(format!("unknown sandwich form '{s}' (robust|plugin)"))),
        }
    }
}

/// Estimated covariance of `θ̂` (not of `√n(θ̂ − θ)`), in the flat layout.
pub fn asymptotic_cov(theta: &Theta, series: &CoefSeries, form: SandwichForm) -> Result<DMatrix<f64>> {
    if theta.dim() != series.dim() {
        return Err(Error::Dimension(format!(
            "parameters have M = {} but the series has M = {}",
            theta.dim(),
            series.dim()
        )));
    }
    if series.len() < 2 {
        return Err(Error::Argument("covariance needs at least two observations".into()));
    }
    let m = series.dim();
    let p = theta.n_params();
    let mut q = DMatrix::zeros(p, p);
    let mut omega = DMatrix::zeros(p, p);
    let mut h = DMatrix::zeros(m, p);
    let mut j = DMatrix::zeros(m, m);
    walk_with_jacobians(theta, series, |i, s, jac| {
        let r = &series.y2()[i] - s;
        q += jac.tr_mul(jac);
        match form {
            SandwichForm::Robust => {
                let score = jac.tr_mul(&r);
                omega += &score * score.transpose();
            }
            SandwichForm::Plugin => {
                h += jac;
                j += &r * r.transpose();
            }
        }
    });
    let n = series.len() as f64;
    q /= n;
    match form {
        SandwichForm::Robust => omega /= n,
        SandwichForm::Plugin => {
            h /= n;
            j /= n;
            omega = h.transpose() * j * h;
        }
    }

    let eig = SymmetricEigen::new(q.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(max > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "Q has condition number {:.3e} (limit {MAX_CONDITION:.0e})",
            max / min
        )));
    }
    let qinv = eig.eigenvectors.clone()
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v))
        * eig.eigenvectors.transpose();
    let cov = &qinv * omega * &qinv / n;
    Ok((&cov + cov.transpose()) * 0.5)
}
