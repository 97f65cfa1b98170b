//! Monte Carlo checks of the stationarity conditions and of the geometric
//! forgetting of the volatility recursion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::innovation::InnovationGen;
use super::simulate::volatility_step;
use super::spec::FGarchSpec;
use crate::error::{Error, Result};
use crate::function_space::{Curve, Kernel2D};
use crate::rng;

/// `γ(t,s) = α(t,s) ε²(s) + β(t,s)`.
pub fn gamma_kernel(spec: &FGarchSpec, eps: &Curve) -> Result<Kernel2D> {
    let grid = spec.grid();
    if eps.grid() != grid {
        return Err(Error::Dimension("innovation and spec grids differ".into()));
    }
    let t = grid.len();
    let e2: Vec<f64> = eps.values().iter().map(|e| e * e).collect();
    let values = spec
        .alpha()
        .values()
        .chunks_exact(t)
        .zip(spec.beta().values().chunks_exact(t))
        .flat_map(|(ar, br)| {
            ar.iter()
                .zip(br)
                .zip(&e2)
                .map(|((a, b), e)| a * e + b)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Kernel2D::from_raw(grid, values))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    /// Draws whose value was `-∞` (a zero norm under the logarithm).
    pub neg_inf: usize,
}

impl McSummary {
    pub(crate) fn from_values(values: &[f64]) -> Self {
        let reps = values.len();
        let neg_inf = values.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        if neg_inf > 0 {
            return Self {
                mean: f64::NEG_INFINITY,
                stderr: f64::NAN,
                reps,
                neg_inf,
            };
        }
        if reps == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                reps,
                neg_inf,
            };
        }
        // shifted sums: identical draws give exactly zero spread
        let shift = values[0];
        let (s1, s2) = values.iter().fold((0.0, 0.0), |(a, b), v| {
            let d = v - shift;
            (a + d, b + d * d)
        });
        let n = reps as f64;
        let mean = shift + s1 / n;
        let stderr = if reps > 1 {
            ((s2 - s1 * s1 / n).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        Self {
            mean,
            stderr,
            reps,
            neg_inf,
        }
    }
}

/// Column statistics that give `‖γ‖_S` in `O(T)` per innovation:
/// `T² ‖γ‖² = Σ_k ε_k⁴ Σ_j α_jk² + 2 ε_k² Σ_j α_jk β_jk + Σ_j β_jk²`.
struct GammaNormStats {
    aa: Vec<f64>,
    ab: Vec<f64>,
    bb: Vec<f64>,
}

impl GammaNormStats {
    fn new(spec: &FGarchSpec) -> Self {
        let t = spec.grid().len();
        let mut s = Self {
            aa: vec![0.0; t],
            ab: vec![0.0; t],
            bb: vec![0.0; t],
        };
        for (ar, br) in spec
            .alpha()
            .values()
            .chunks_exact(t)
            .zip(spec.beta().values().chunks_exact(t))
        {
            for k in 0..t {
                s.aa[k] += ar[k] * ar[k];
                s.ab[k] += ar[k] * br[k];
                s.bb[k] += br[k] * br[k];
            }
        }
        s
    }

    fn hs_norm(&self, eps: &[f64]) -> f64 {
        let t = eps.len() as f64;
        let sq: f64 = eps
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let e2 = e * e;
                e2 * e2 * self.aa[k] + 2.0 * e2 * self.ab[k] + self.bb[k]
            })
            .sum();
        sq.max(0.0).sqrt() / t
    }
}

fn monte_carlo(reps: usize, seed: u64, draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync) -> McSummary {
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| draw(&mut rng::stream(seed, r as u64)))
        .collect();
    McSummary::from_values(&values)
}

/// Monte Carlo estimate of `E[log ‖γ₀‖_S]`.
pub fn lyapunov_l2(spec: &FGarchSpec, gen: &InnovationGen, reps: usize) -> Result<McSummary> {
    gen.validate()?;
    let grid = spec.grid();
    let stats = GammaNormStats::new(spec);
    Ok(monte_carlo(reps, gen.seed, |r| {
        let mut eps = vec![0.0; grid.len()];
        gen.fill(grid, r, &mut eps);
        stats.hs_norm(&eps).ln()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Hilbert–Schmidt norm of `γ₀`.
    Hs,
    /// Sup norm of `∫ γ₀(·,s) ds`.
    Sup,
}

/// Monte Carlo estimate of `E[‖γ₀‖^ν]` for the chosen norm.
pub fn moment_norm(
    spec: &FGarchSpec,
    gen: &InnovationGen,
    nu: f64,
    reps: usize,
    kind: NormKind,
) -> Result<McSummary> {
    gen.validate()?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Argument(format!("moment order must be positive, got {nu}")));
    }
    let grid = spec.grid();
    let t = grid.len();
    match kind {
        NormKind::Hs => {
            let stats = GammaNormStats::new(spec);
            Ok(monte_carlo(reps, gen.seed, |r| {
                let mut eps = vec![0.0; t];
                gen.fill(grid, r, &mut eps);
                stats.hs_norm(&eps).powf(nu)
            }))
        }
        NormKind::Sup => {
            // ∫γ₀(t,s)ds = (α ε²)(t) + ∫β(t,s)ds
            let beta_rows = crate::function_space::row_integrate(spec.beta());
            let (alpha, _) = spec.operators();
            Ok(monte_carlo(reps, gen.seed, |r| {
                let mut eps = vec![0.0; t];
                gen.fill(grid, r, &mut eps);
                eps.iter_mut().for_each(|e| *e *= *e);
                let mut out = beta_rows.values().to_vec();
                alpha.apply_add(&eps, &mut out);
                out.iter().fold(0.0f64, |m, v| m.max(v.abs())).powf(nu)
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub ell: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean `L²` distance between `σ_i²` and its coupled version `σ_{i,ℓ}²`,
/// which shares the `ℓ` most recent innovations and uses independent copies
/// before them. Both paths start from `δ` and run `warmup` steps on their
/// own innovations first.
pub fn coupling_decay(
    spec: &FGarchSpec,
    gen: &InnovationGen,
    ells: &[usize],
    reps: usize,
    warmup: usize,
) -> Result<Vec<CouplingRow>> {
    gen.validate()?;
    let grid = spec.grid();
    let t = grid.len();
    let w = grid.weight();
    let rows = ells
        .iter()
        .enumerate()
        .map(|(idx, &ell)| {
            let seed = gen.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(idx as u64 + 1));
            let summary = monte_carlo(reps, seed, |r| {
                let mut eps = vec![0.0; t];
                let mut y2 = vec![0.0; t];
                let mut next = vec![0.0; t];
                let mut paths = [spec.delta().values().to_vec(), spec.delta().values().to_vec()];
                for path in paths.iter_mut() {
                    for _ in 0..warmup {
                        gen.fill(grid, r, &mut eps);
                        volatility_step(spec, path, &eps, &mut y2, &mut next);
                        std::mem::swap(path, &mut next);
                    }
                }
                for _ in 0..ell {
                    gen.fill(grid, r, &mut eps);
                    for path in paths.iter_mut() {
                        volatility_step(spec, path, &eps, &mut y2, &mut next);
                        std::mem::swap(path, &mut next);
                    }
                }
                let sq: f64 = paths[0]
                    .iter()
                    .zip(&paths[1])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (sq * w).sqrt()
            });
            CouplingRow {
                ell,
                mean: summary.mean,
                stderr: summary.stderr,
            }
        })
        .collect();
    Ok(rows)
}

/// Least-squares line through `(x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn log_linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Argument("need at least two matching points".into()));
    }
    if let Some(v) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Argument(format!("cannot take the logarithm of {v}")));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{hs_norm, row_integrate, sup_norm, Grid};

    fn beta_only(g: Grid, scale: f64) -> FGarchSpec {
        let phi = |t: f64| 30f64.sqrt() * t * (1.0 - t);
        let beta = Kernel2D::from_fn(g, move |t, s| scale * phi(t) * phi(s));
        FGarchSpec::new(Curve::constant(g, 0.01), Kernel2D::zeros(g), beta).unwrap()
    }

    #[test]
    fn gamma_kernel_examples() {
        let g = Grid::new(285).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        assert_eq!(gamma_kernel(&spec, &Curve::zeros(g)).unwrap(), *spec.beta());
        let k = gamma_kernel(&spec, &Curve::constant(g, 1.0)).unwrap();
        assert!((hs_norm(&k) - 0.8).abs() < 2e-3);
        let b = beta_only(g, 0.4);
        let eps = Curve::from_fn(g, |t| 3.0 * t - 1.0);
        assert_eq!(gamma_kernel(&b, &eps).unwrap(), *b.beta());
    }

    #[test]
    fn fast_norms_agree_with_direct_kernels() {
        let g = Grid::new(50).unwrap();
        let spec = FGarchSpec::new(
            Curve::constant(g, 0.01),
            Kernel2D::from_fn(g, |t, s| (t + s) * 0.3),
            Kernel2D::from_fn(g, |t, s| (t * s).sqrt() * 0.2),
        )
        .unwrap();
        let stats = GammaNormStats::new(&spec);
        let gen = InnovationGen::ou_bridge(30.0, 4);
        let mut r = rng::stream(4, 0);
        for _ in 0..5 {
            let eps = gen.draw(g, &mut r);
            let direct = hs_norm(&gamma_kernel(&spec, &eps).unwrap());
            assert!((stats.hs_norm(eps.values()) - direct).abs() < 1e-13);
        }
        // the sup variant, one draw
        let gen = InnovationGen::ou_bridge(30.0, 8);
        let mc = moment_norm(&spec, &gen, 1.0, 1, NormKind::Sup).unwrap();
        let eps = gen.draw(g, &mut rng::stream(8, 0));
        let direct = sup_norm(&row_integrate(&gamma_kernel(&spec, &eps).unwrap()));
        assert!((mc.mean - direct).abs() < 1e-13);
    }

    #[test]
    fn deterministic_spec_has_no_variance() {
        let g = Grid::new(285).unwrap();
        let spec = beta_only(g, 0.4);
        let gen = InnovationGen::ou_bridge(200.0, 1);
        let l = lyapunov_l2(&spec, &gen, 500).unwrap();
        assert!((l.mean - 0.4f64.ln()).abs() < 1e-6);
        assert_eq!(l.stderr, 0.0);
        let m = moment_norm(&spec, &gen, 1.0, 200, NormKind::Hs).unwrap();
        assert!((m.mean - 0.4).abs() < 1e-6);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn unit_norm_beta_sits_on_the_boundary() {
        let g = Grid::new(285).unwrap();
        let raw = beta_only(g, 1.0);
        let scale = 1.0 / hs_norm(raw.beta());
        let spec = beta_only(g, scale);
        let l = lyapunov_l2(&spec, &InnovationGen::ou_bridge(200.0, 2), 100).unwrap();
        assert!(l.mean.abs() < 1e-12);
    }

    #[test]
    fn zero_kernels() {
        let g = Grid::new(20).unwrap();
        let spec = FGarchSpec::new(Curve::constant(g, 0.1), Kernel2D::zeros(g), Kernel2D::zeros(g)).unwrap();
        let gen = InnovationGen::ou_bridge(200.0, 2);
        for kind in [NormKind::Hs, NormKind::Sup] {
            for nu in [0.5, 1.0, 2.0] {
                assert_eq!(moment_norm(&spec, &gen, nu, 50, kind).unwrap().mean, 0.0);
            }
        }
        let l = lyapunov_l2(&spec, &gen, 10).unwrap();
        assert_eq!(l.mean, f64::NEG_INFINITY);
        assert_eq!(l.neg_inf, 10);
        for row in coupling_decay(&spec, &gen, &[0, 1, 5], 20, 10).unwrap() {
            assert_eq!(row.mean, 0.0);
        }
        assert!(moment_norm(&spec, &gen, 0.0, 5, NormKind::Hs).is_err());
    }

    #[test]
    fn preset_moment_is_below_one() {
        let g = Grid::new(285).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        let m = moment_norm(&spec, &InnovationGen::ou_bridge(200.0, 3), 1.0, 20_000, NormKind::Hs).unwrap();
        assert!(m.mean > 0.0 && m.mean < 1.0, "{m:?}");
    }

    #[test]
    fn long_coupling_is_complete() {
        let g = Grid::new(60).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        let rows = coupling_decay(&spec, &InnovationGen::ou_bridge(200.0, 3), &[0, 200], 50, 50).unwrap();
        assert!(rows[0].mean > 1e-4);
        assert!(rows[1].mean < 1e-12 * rows[0].mean.max(1.0));
    }

    #[test]
    fn log_linear_fit_recovers_exponential() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * (-0.5 * v).exp()).collect();
        let fit = log_linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(log_linear_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn summary_statistics() {
        let s = McSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
