use super::recursion::{shat_recursion, CoefSeries};
use super::theta::Theta;
use crate::basis::{reconstruct_curve, BasisSet};
use crate::error::{Error, Result};
use crate::function_space::{apply_kernel, Curve, Kernel2D};

/// Reconstructed conditional volatility curves with negative values clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityFilter {
    pub curves: Vec<Curve>,
    /// Number of grid values raised to zero.
    pub clipped: usize,
}

/// `σ̂_i² = Σ_m ŝ_{i,m} φ_m`, clipped at zero. Entry 0 is the `ŝ_1 = 0` start.
pub fn volatility_filter(theta: &Theta, series: &CoefSeries, basis: &BasisSet) -> Result<VolatilityFilter> {
    if basis.len() != theta.dim() {
        return Err(Error::Dimension(format!(
            "basis has {} functions, parameters have M = {}",
            basis.len(),
            theta.dim()
        )));
    }
    let mut clipped = 0;
    let mut curves = Vec::with_capacity(series.len());
    for s in shat_recursion(theta, series)? {
        let mut values = reconstruct_curve(s.as_slice(), basis)?.into_values();
        for v in values.iter_mut().filter(|v| **v < 0.0) {
            *v = 0.0;
            clipped += 1;
        }
        curves.push(Curve::new(basis.grid(), values)?);
    }
    Ok(VolatilityFilter { curves, clipped })
}

/// Moment estimator `ȳ² − (α̂ + β̂) ȳ²` of the intercept curve.
pub fn delta_tilde(alpha_hat: &Kernel2D, beta_hat: &Kernel2D, sample: &[Curve]) -> Result<Curve> {
    let squares: Vec<Curve> = sample.iter().map(Curve::squared).collect();
    let mean = Curve::mean(&squares)?;
    let sum = alpha_hat.add(beta_hat)?;
    mean.sub(&apply_kernel(&sum, &mean)?)
}
