use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{Curve, Grid};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationKind {
    /// Time-changed Brownian motion
    /// `ε(t) = √(log 2) · 2^{-ct} · B(2^{2ct} / log 2)`.
    ///
    /// At the grid points this is a stationary Gaussian AR(1) with unit
    /// variance and lag-one correlation `2^{-c/T}`.
    OuBridge,
    /// Independent standard normals at every grid point. Only useful for
    /// degenerate tests.
    IidGaussianPointwise,
}

/// Innovation law together with the seed of its random stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationGen {
    pub kind: InnovationKind,
    /// Decay rate `c`; ignored for pointwise Gaussian innovations.
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    200.0
}

impl InnovationGen {
    pub fn ou_bridge(rate: f64, seed: u64) -> Self {
        Self {
            kind: InnovationKind::OuBridge,
            rate,
            seed,
        }
    }

    pub fn iid_gaussian(seed: u64) -> Self {
        Self {
            kind: InnovationKind::IidGaussianPointwise,
            rate: default_rate(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == InnovationKind::OuBridge && !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Argument(format!(
                "innovation rate must be positive and finite, got {}",
                self.rate
            )));
        }
        Ok(())
    }

    /// Lag-one correlation `2^{-c/T}` between neighbouring grid points.
    pub fn lag_one_correlation(&self, grid: Grid) -> f64 {
        match self.kind {
            InnovationKind::OuBridge => (-self.rate * std::f64::consts::LN_2 / grid.len() as f64).exp(),
            InnovationKind::IidGaussianPointwise => 0.0,
        }
    }

    /// Overwrites `out` with one innovation curve.
    pub fn fill<R: Rng + ?Sized>(&self, grid: Grid, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), grid.len());
        match self.kind {
            InnovationKind::OuBridge => {
                let rho = self.lag_one_correlation(grid);
                let innov_sd = (1.0 - rho * rho).sqrt();
                let mut prev: f64 = rng.sample(StandardNormal);
                out[0] = prev;
                for o in out.iter_mut().skip(1) {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innov_sd * z;
                    *o = prev;
                }
            }
            InnovationKind::IidGaussianPointwise => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, grid: Grid, rng: &mut R) -> Curve {
        let mut v = vec![0.0; grid.len()];
        self.fill(grid, rng, &mut v);
        Curve::from_raw(grid, v)
    }
}

/// One innovation curve from stream 0 of `gen.seed`.
pub fn ou_innovation(gen: &InnovationGen, grid: Grid) -> Result<Curve> {
    if gen.kind != InnovationKind::OuBridge {
        return Err(Error::Argument("ou_innovation needs an ou_bridge generator".into()));
    }
    gen.validate()?;
    Ok(gen.draw(grid, &mut rng::stream(gen.seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_one_correlation_closed_form() {
        let g = Grid::new(285).unwrap();
        let rho = InnovationGen::ou_bridge(200.0, 0).lag_one_correlation(g);
        assert!((rho - 2f64.powf(-200.0 / 285.0)).abs() < 1e-15);
        assert!((rho - 0.615).abs() < 1e-3);
    }

    #[test]
    fn same_seed_same_curve() {
        let g = Grid::new(50).unwrap();
        let gen = InnovationGen::ou_bridge(200.0, 3);
        assert_eq!(ou_innovation(&gen, g).unwrap(), ou_innovation(&gen, g).unwrap());
        let other = InnovationGen::ou_bridge(200.0, 4);
        assert_ne!(ou_innovation(&gen, g).unwrap(), ou_innovation(&other, g).unwrap());
    }

    #[test]
    fn rejects_bad_rate_and_kind() {
        let g = Grid::new(5).unwrap();
        assert!(ou_innovation(&InnovationGen::ou_bridge(0.0, 1), g).is_err());
        assert!(ou_innovation(&InnovationGen::iid_gaussian(1), g).is_err());
    }

    #[test]
    fn pointwise_variance_is_one() {
        let g = Grid::new(30).unwrap();
        let gen = InnovationGen::ou_bridge(50.0, 11);
        let mut rng = rng::stream(11, 5);
        let reps = 20_000;
        let mut sq = vec![0.0; 30];
        for _ in 0..reps {
            let c = gen.draw(g, &mut rng);
            sq.iter_mut().zip(c.values()).for_each(|(s, v)| *s += v * v);
        }
        for s in sq {
            assert!((s / reps as f64 - 1.0).abs() < 0.05);
        }
    }
}
