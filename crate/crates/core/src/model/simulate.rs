use rand::Rng;

use super::innovation::InnovationGen;
use super::spec::FGarchSpec;
use crate::error::{Error, Result};
use crate::function_space::{Curve, Grid};
use crate::rng;

/// Simulated return curves together with the volatilities and innovations
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub y: Vec<Curve>,
    pub sigma2: Vec<Curve>,
    pub eps: Vec<Curve>,
    pub burnin: usize,
}

/// One step of the volatility recursion:
/// `next = δ + α(σ² ε²) + β σ²`.
pub(crate) fn volatility_step(spec: &FGarchSpec, sigma2: &[f64], eps: &[f64], y2: &mut [f64], next: &mut [f64]) {
    let (alpha, beta) = spec.operators();
    y2.iter_mut()
        .zip(sigma2.iter().zip(eps))
        .for_each(|(o, (s, e))| *o = s * e * e);
    next.fill(0.0);
    alpha.apply_add(y2, next);
    beta.apply_add(sigma2, next);
    // both kernels are nonnegative, so any negative sum is rounding noise
    next.iter_mut()
        .zip(spec.delta().values())
        .for_each(|(n, d)| *n = d + n.max(0.0));
}

fn run(
    spec: &FGarchSpec,
    n: usize,
    burnin: usize,
    mut next_eps: impl FnMut(usize, &mut [f64]) -> Result<()>,
) -> Result<SimResult> {
    let grid = spec.grid();
    let t = grid.len();
    let mut sigma2 = spec.delta().values().to_vec();
    let mut next = vec![0.0; t];
    let mut eps = vec![0.0; t];
    let mut y2 = vec![0.0; t];
    let mut out = SimResult {
        y: Vec::with_capacity(n),
        sigma2: Vec::with_capacity(n),
        eps: Vec::with_capacity(n),
        burnin,
    };
    for i in 0..burnin + n {
        if i > 0 {
            volatility_step(spec, &sigma2, &eps, &mut y2, &mut next);
            std::mem::swap(&mut sigma2, &mut next);
            if let Some(j) = sigma2.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Consistency(format!(
                    "volatility at step {} grid point {} is {}",
                    i + 1,
                    j,
                    sigma2[j]
                )));
            }
        }
        next_eps(i, &mut eps)?;
        if i >= burnin {
            let y = sigma2.iter().zip(&eps).map(|(s, e)| s.sqrt() * e).collect();
            out.y.push(Curve::from_raw(grid, y));
            out.sigma2.push(Curve::from_raw(grid, sigma2.clone()));
            out.eps.push(Curve::from_raw(grid, eps.clone()));
        }
    }
    Ok(out)
}

/// Runs the recursion from `σ₁² = δ`, discards the first `burnin` curves and
/// keeps the next `n`. Innovations come from stream 0 of `gen.seed`.
pub fn simulate(spec: &FGarchSpec, gen: &InnovationGen, n: usize, burnin: usize) -> Result<SimResult> {
    simulate_with_rng(spec, gen, n, burnin, &mut rng::stream(gen.seed, 0))
}

/// As [`simulate`], drawing innovations from a caller-supplied generator.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    spec: &FGarchSpec,
    gen: &InnovationGen,
    n: usize,
    burnin: usize,
    rng: &mut R,
) -> Result<SimResult> {
    gen.validate()?;
    let grid: Grid = spec.grid();
    run(spec, n, burnin, |_, eps| {
        gen.fill(grid, rng, eps);
        Ok(())
    })
}

/// Runs the recursion on a fixed innovation sequence. The first `burnin`
/// innovations drive the burn-in; the result holds the remaining ones.
pub fn simulate_from_innovations(spec: &FGarchSpec, eps: &[Curve], burnin: usize) -> Result<SimResult> {
    if eps.len() < burnin {
        return Err(Error::Argument(format!(
            "{} innovations cannot cover a burn-in of {burnin}",
            eps.len()
        )));
    }
    let grid = spec.grid();
    if let Some(i) = eps.iter().position(|e| e.grid() != grid) {
        return Err(Error::Dimension(format!("innovation {i} is on another grid")));
    }
    run(spec, eps.len() - burnin, burnin, |i, out| {
        out.copy_from_slice(eps[i].values());
        Ok(())
    })
}
