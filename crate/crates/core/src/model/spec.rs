use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::function_space::{Curve, Grid, Kernel2D};
use crate::operator::IntegralOperator;

/// Entries below `-NEG_TOL · max|entry|` are rejected as negative; smaller
/// excursions are rounding noise from basis reconstruction.
const NEG_TOL: f64 = 1e-12;

/// Intercept curve and the two kernels of an fGARCH(1,1) process.
///
/// All three must be nonnegative.
#[derive(Debug, Clone)]
pub struct FGarchSpec {
    delta: Curve,
    alpha: Kernel2D,
    beta: Kernel2D,
    ops: OnceLock<(IntegralOperator, IntegralOperator)>,
}

impl FGarchSpec {
    pub fn new(delta: Curve, alpha: Kernel2D, beta: Kernel2D) -> Result<Self> {
        let grid = delta.grid();
        if alpha.grid() != grid || beta.grid() != grid {
            return Err(Error::Dimension(
                "delta, alpha and beta must share one grid".into(),
            ));
        }
        check_nonnegative("delta", delta.values())?;
        check_nonnegative("alpha", alpha.values())?;
        check_nonnegative("beta", beta.values())?;
        Ok(Self {
            delta,
            alpha,
            beta,
            ops: OnceLock::new(),
        })
    }

    /// `δ ≡ 0.01`, `α(t,s) = β(t,s) = 12 t(1-t) s(1-s)`.
    pub fn paper_preset(grid: Grid) -> Self {
        let k = Kernel2D::from_fn(grid, |t, s| 12.0 * t * (1.0 - t) * s * (1.0 - s));
        Self::new(Curve::constant(grid, 0.01), k.clone(), k).expect("valid preset")
    }

    pub fn grid(&self) -> Grid {
        self.delta.grid()
    }

    pub fn delta(&self) -> &Curve {
        &self.delta
    }

    pub fn alpha(&self) -> &Kernel2D {
        &self.alpha
    }

    pub fn beta(&self) -> &Kernel2D {
        &self.beta
    }

    /// Factored operators for `α` and `β`, built on first use.
    pub(crate) fn operators(&self) -> &(IntegralOperator, IntegralOperator) {
        self.ops.get_or_init(|| {
            (
                IntegralOperator::new(&self.alpha),
                IntegralOperator::new(&self.beta),
            )
        })
    }
}

fn check_nonnegative(name: &str, values: &[f64]) -> Result<()> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match values.iter().position(|&v| v < -NEG_TOL * scale) {
        Some(i) => Err(Error::Argument(format!(
            "{name} must be nonnegative; entry {i} is {}",
            values[i]
        ))),
        None => Ok(()),
    }
}
