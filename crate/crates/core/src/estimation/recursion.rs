//! The feasible volatility recursion on basis coefficients and the
//! least-squares criterion built on it.

use nalgebra::{DMatrix, DVector};

use super::theta::{param_count, Theta};
use crate::basis::{project, BasisSet};
use crate::error::{Error, Result};
use crate::function_space::Curve;

/// Basis coefficients `y_i^(2) = ⟨y_i², φ_m⟩` of a squared-curve sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefSeries {
    y2: Vec<DVector<f64>>,
    m: usize,
    basis: Option<BasisSet>,
}

impl CoefSeries {
    /// Wraps precomputed coefficient vectors (no basis attached).
    pub fn from_coefficients(y2: Vec<DVector<f64>>) -> Result<Self> {
        let m = y2.first().map_or(0, |v| v.len());
        if m == 0 {
            return Err(Error::Argument("coefficient series needs M ≥ 1".into()));
        }
        if let Some(i) = y2.iter().position(|v| v.len() != m) {
            return Err(Error::Dimension(format!("coefficient vector {i} has the wrong length")));
        }
        if y2.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Argument("coefficients must be finite".into()));
        }
        Ok(Self { y2, m, basis: None })
    }

    /// Scalar series (`M = 1`).
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_coefficients(values.iter().map(|&v| DVector::from_element(1, v)).collect())
    }

    pub fn len(&self) -> usize {
        self.y2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y2.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn y2(&self) -> &[DVector<f64>] {
        &self.y2
    }

    pub fn basis(&self) -> Option<&BasisSet> {
        self.basis.as_ref()
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.m);
        for v in &self.y2 {
            acc += v;
        }
        acc / self.y2.len().max(1) as f64
    }

    /// Multiplies coordinate `m` by `signs[m]` (basis functions follow).
    pub(crate) fn with_signs(&self, signs: &[f64]) -> Self {
        Self {
            y2: self
                .y2
                .iter()
                .map(|v| DVector::from_fn(self.m, |i, _| signs[i] * v[i]))
                .collect(),
            m: self.m,
            basis: self.basis.as_ref().map(|b| {
                let mut out = b.clone();
                for (i, s) in signs.iter().enumerate() {
                    if *s < 0.0 {
                        out = out.with_flipped_sign(i);
                    }
                }
                out
            }),
        }
    }
}

/// Squares every curve pointwise and projects onto `basis`.
pub fn project_sample(sample: &[Curve], basis: &BasisSet) -> Result<CoefSeries> {
    let y2 = sample
        .iter()
        .map(|c| project(&c.squared(), basis).map(DVector::from_vec))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefSeries {
        y2,
        m: basis.len(),
        basis: Some(basis.clone()),
    })
}

fn check_dims(theta: &Theta, series: &CoefSeries) -> Result<()> {
    if theta.dim() != series.dim() {
        return Err(Error::Dimension(format!(
            "parameters have M = {} but the series has M = {}",
            theta.dim(),
            series.dim()
        )));
    }
    Ok(())
}

/// `ŝ_1 = 0`, `ŝ_i = d + A y_{i-1} + B ŝ_{i-1}` for `i = 2..n`.
///
/// The returned vector has length `n`; entry `0` is `ŝ_1 = 0`.
pub fn shat_recursion(theta: &Theta, series: &CoefSeries) -> Result<Vec<DVector<f64>>> {
    check_dims(theta, series)?;
    let mut out = Vec::with_capacity(series.len());
    let mut s = DVector::zeros(series.dim());
    for i in 0..series.len() {
        if i > 0 {
            s = &theta.d + &theta.a * &series.y2[i - 1] + &theta.b * &s;
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Walks the recursion together with the Jacobians `∂ŝ_i/∂θ` (`M × p`),
/// calling `visit(i, ŝ_i, J_i)` for `i = 2..n` (zero-based `1..n`).
pub(crate) fn walk_with_jacobians(
    theta: &Theta,
    series: &CoefSeries,
    mut visit: impl FnMut(usize, &DVector<f64>, &DMatrix<f64>),
) {
    let m = series.dim();
    let p = param_count(m);
    let mut s = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, p);
    let mut direct = DMatrix::zeros(m, p);
    for i in 1..series.len() {
        let y_prev = &series.y2[i - 1];
        direct.fill(0.0);
        for r in 0..m {
            direct[(r, r)] = 1.0;
            for c in 0..m {
                direct[(r, m + r * m + c)] = y_prev[c];
                direct[(r, m + m * m + r * m + c)] = s[c];
            }
        }
        // J_i = direct + B J_{i-1}, evaluated before s is advanced
        jac = &direct + &theta.b * &jac;
        s = &theta.d + &theta.a * y_prev + &theta.b * &s;
        visit(i, &s, &jac);
    }
}

/// `S_n(θ) = Σ_{i=2}^n ‖y_i − ŝ_i‖²`.
pub fn objective(theta: &Theta, series: &CoefSeries) -> Result<f64> {
    Ok(shat_recursion(theta, series)?
        .iter()
        .zip(&series.y2)
        .skip(1)
        .map(|(s, y)| (y - s).norm_squared())
        .sum())
}

/// Objective and its exact gradient in the flat parameter layout.
pub fn objective_and_gradient(theta: &Theta, series: &CoefSeries) -> Result<(f64, Vec<f64>)> {
    check_dims(theta, series)?;
    let p = theta.n_params();
    let mut value = 0.0;
    let mut grad = DVector::zeros(p);
    walk_with_jacobians(theta, series, |i, s, jac| {
        let r = &series.y2[i] - s;
        value += r.norm_squared();
        grad -= 2.0 * jac.tr_mul(&r);
    });
    Ok((value, grad.iter().copied().collect()))
}

/// `∇S_n(θ) = −2 Σ_i (∂ŝ_i/∂θ)ᵀ (y_i − ŝ_i)`.
pub fn gradient(theta: &Theta, series: &CoefSeries) -> Result<Vec<f64>> {
    objective_and_gradient(theta, series).map(|(_, g)| g)
}
