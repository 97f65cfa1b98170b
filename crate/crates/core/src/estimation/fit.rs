use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::{asymptotic_cov, SandwichForm};
use super::optimize::{Outcome, Problem, Settings};
use super::recursion::{objective, CoefSeries};
use super::theta::{ThetaBounds, Theta};
use crate::basis::{reconstruct_curve, reconstruct_kernel, BasisKind};
use crate::error::{Error, Result};
use crate::function_space::{Curve, Kernel2D};
use crate::rng;

/// Optimizer configuration for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub bounds: ThetaBounds,
    /// Total number of starts, the moment-based one included.
    pub n_starts: usize,
    pub max_iter: usize,
    /// Projected-gradient tolerance relative to its value at the start.
    pub gtol: f64,
    pub barrier_weight: f64,
    pub min_n: usize,
    pub seed: u64,
    /// `Some(form)` computes the sandwich covariance.
    pub covariance: Option<SandwichForm>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: ThetaBounds::default(),
            n_starts: 8,
            max_iter: 500,
            gtol: 1e-8,
            barrier_weight: 1e-10,
            min_n: 20,
            seed: 0,
            covariance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub index: usize,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub projected_gradient: f64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveConstraints {
    pub det_a: bool,
    pub norm_b: bool,
    pub entry_box: bool,
}

/// Reconstructed functional parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFunctions {
    pub delta_hat: Curve,
    pub alpha_hat: Kernel2D,
    pub beta_hat: Kernel2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub objective_value: f64,
    pub converged: bool,
    pub n_starts_used: usize,
    pub best_start: usize,
    pub constraint_active: ActiveConstraints,
    pub cov: Option<DMatrix<f64>>,
    /// Present when the series carries its basis.
    pub functions: Option<FittedFunctions>,
    pub basis: Option<BasisKind>,
    /// Violations of the nonnegativity of `δ̂`, `α̂`, `β̂`.
    pub warnings: Vec<String>,
    pub starts: Vec<StartReport>,
}

/// Coordinate signs that make every sample mean coefficient nonnegative.
fn canonical_signs(series: &CoefSeries) -> Vec<f64> {
    series
        .mean()
        .iter()
        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
        .collect()
}

/// Lag-one regression for `A`, `B = 0.1 I`, `d` from `ȳ = d + (A + B) ȳ`.
fn moment_start(series: &CoefSeries, bounds: &ThetaBounds) -> Theta {
    let m = series.dim();
    let mean = series.mean();
    let y = series.y2();
    let mut c0 = DMatrix::zeros(m, m);
    let mut c1 = DMatrix::zeros(m, m);
    for i in 1..y.len() {
        let prev = &y[i - 1] - &mean;
        let cur = &y[i] - &mean;
        c0 += &prev * prev.transpose();
        c1 += &cur * prev.transpose();
    }
    let id = DMatrix::identity(m, m);
    let mut a = c0
        .pseudo_inverse(1e-12)
        .map(|inv| c1 * inv)
        .unwrap_or_else(|_| id.clone() * 0.3);
    a.iter_mut()
        .for_each(|v| *v = if v.is_finite() { v.clamp(-0.9 * bounds.box_bound, 0.9 * bounds.box_bound) } else { 0.0 });
    if a.determinant().abs() < 2.0 * bounds.c1 {
        a = id.clone() * 0.3;
    }
    let b = id.clone() * (0.1f64).min(0.5 * bounds.c2 / (m as f64).sqrt());
    let d = (&id - &a - &b) * mean;
    Theta { d, a, b }
}

fn random_start(series: &CoefSeries, bounds: &ThetaBounds, rng: &mut impl Rng) -> Theta {
    let m = series.dim();
    let mean = series.mean();
    let off = if m > 1 { 0.1 } else { 0.0 };
    let mut a: DMatrix<f64> = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            rng.random_range(0.05..0.9)
        } else {
            rng.random_range(-off..=off)
        }
    });
    if a.determinant().abs() < 2.0 * bounds.c1 {
        a = DMatrix::identity(m, m) * 0.5;
    }
    let mut b: DMatrix<f64> = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            rng.random_range(0.0..0.9)
        } else {
            rng.random_range(-off..=off)
        }
    });
    let nb = b.norm();
    if nb > 0.95 * bounds.c2 {
        b *= 0.95 * bounds.c2 / nb;
    }
    let d = (DMatrix::identity(m, m) - &a - &b) * mean;
    Theta { d, a, b }
}

fn active_constraints(theta: &Theta, bounds: &ThetaBounds) -> ActiveConstraints {
    ActiveConstraints {
        det_a: theta.a.determinant().abs() <= bounds.c1 * (1.0 + 1e-3),
        norm_b: theta.b.norm() >= bounds.c2 * (1.0 - 1e-9),
        entry_box: theta
            .to_flat()
            .iter()
            .any(|v| v.abs() >= bounds.box_bound * (1.0 - 1e-12)),
    }
}

fn nonnegativity_warnings(f: &FittedFunctions) -> Vec<String> {
    let mut out = Vec::new();
    let dmin = f.delta_hat.values().iter().copied().fold(f64::INFINITY, f64::min);
    if dmin < 0.0 {
        out.push(format!("delta_hat takes negative values (minimum {dmin:.3e})"));
    }
    for (name, k) in [("alpha_hat", &f.alpha_hat), ("beta_hat", &f.beta_hat)] {
        let kmin = k.min_value();
        if kmin < 0.0 {
            out.push(format!("{name} takes negative values (minimum {kmin:.3e})"));
        }
    }
    out
}

/// Least-squares fit of `(d, A, B)` over the compact parameter set.
///
/// Runs the moment-based start plus `n_starts − 1` random starts and keeps
/// the converged start with the lowest objective (ties go to the lower
/// start index). Coordinates are first oriented so that every mean
/// coefficient is nonnegative, which makes the fitted functions independent
/// of the sign convention of the basis.
pub fn fit(series: &CoefSeries, opts: &FitOptions) -> Result<FitResult> {
    opts.bounds.validate()?;
    if series.len() < opts.min_n.max(2) {
        return Err(Error::Argument(format!(
            "sample of size {} is below the minimum of {}",
            series.len(),
            opts.min_n.max(2)
        )));
    }
    if opts.n_starts == 0 {
        return Err(Error::Argument("at least one start is required".into()));
    }
    let m = series.dim();
    let signs = canonical_signs(series);
    let canon = series.with_signs(&signs);

    let mut starts = vec![moment_start(&canon, &opts.bounds)];
    let mut r = rng::stream(opts.seed, 0x5747);
    for _ in 1..opts.n_starts {
        starts.push(random_start(&canon, &opts.bounds, &mut r));
    }

    let settings = Settings {
        max_iter: opts.max_iter,
        gtol: opts.gtol,
        barrier_weight: opts.barrier_weight,
    };
    let outcomes: Vec<Outcome> = starts
        .par_iter()
        .map(|s| Problem::new(&canon, opts.bounds).minimize(&s.to_flat(), &settings))
        .collect();

    let reports: Vec<StartReport> = outcomes
        .iter()
        .enumerate()
        .map(|(index, o)| StartReport {
            index,
            objective: o.objective,
            converged: o.converged,
            iterations: o.iterations,
            projected_gradient: o.pg_norm,
            message: o.message.clone(),
        })
        .collect();

    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.converged)
        .fold(None::<(usize, &Outcome)>, |acc, (i, o)| match acc {
            Some((_, b)) if b.objective <= o.objective => acc,
            _ => Some((i, o)),
        });
    let Some((best_start, best)) = best else {
        let summary: Vec<String> = reports
            .iter()
            .map(|r| format!("start {}: {} (S = {:.6e})", r.index, r.message, r.objective))
            .collect();
        return Err(Error::NonConvergence(summary.join("; ")));
    };

    let canon_theta = Theta::from_flat(m, &best.x)?;
    let theta_hat = canon_theta.conjugate_signs(&signs);
    let objective_value = objective(&theta_hat, series)?;

    let cov = match opts.covariance {
        Some(form) => Some(asymptotic_cov(&theta_hat, series, form)?),
        None => None,
    };

    let functions = match canon.basis() {
        Some(basis) => Some(FittedFunctions {
            delta_hat: reconstruct_curve(canon_theta.d.as_slice(), basis)?,
            alpha_hat: reconstruct_kernel(&canon_theta.a, basis)?,
            beta_hat: reconstruct_kernel(&canon_theta.b, basis)?,
        }),
        None => None,
    };
    let warnings = functions.as_ref().map(nonnegativity_warnings).unwrap_or_default();

    Ok(FitResult {
        constraint_active: active_constraints(&theta_hat, &opts.bounds),
        theta_hat,
        objective_value,
        converged: true,
        n_starts_used: outcomes.len(),
        best_start,
        cov,
        basis: canon.basis().map(|b| b.kind()),
        functions,
        warnings,
        starts: reports,
    })
}

/// Serializable form of a [`FitResult`]. Matrices are row-major; `theta` is
/// `d`, then `A`, then `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub m: usize,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub n_starts_used: usize,
    pub best_start: usize,
    pub constraint_active: ActiveConstraints,
    pub cov: Option<Vec<f64>>,
    pub std_errors: Option<Vec<f64>>,
    pub basis: Option<BasisKind>,
    #[serde(rename = "grid_T")]
    pub grid_t: Option<usize>,
    pub delta_hat: Option<Vec<f64>>,
    pub alpha_hat: Option<Vec<f64>>,
    pub beta_hat: Option<Vec<f64>>,
    pub warnings: Vec<String>,
    pub starts: Vec<StartReport>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl FitResult {
    pub fn report(&self) -> FitReport {
        let f = self.functions.as_ref();
        FitReport {
            m: self.theta_hat.dim(),
            theta: self.theta_hat.to_flat(),
            objective: self.objective_value,
            converged: self.converged,
            n_starts_used: self.n_starts_used,
            best_start: self.best_start,
            constraint_active: self.constraint_active,
            cov: self.cov.as_ref().map(row_major),
            std_errors: self.std_errors().map(|v| v.as_slice().to_vec()),
            basis: self.basis,
            grid_t: f.map(|f| f.delta_hat.grid().len()),
            delta_hat: f.map(|f| f.delta_hat.values().to_vec()),
            alpha_hat: f.map(|f| f.alpha_hat.values().to_vec()),
            beta_hat: f.map(|f| f.beta_hat.values().to_vec()),
            warnings: self.warnings.clone(),
            starts: self.starts.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report())?)
    }

    /// Standard errors from the covariance diagonal, if computed.
    pub fn std_errors(&self) -> Option<DVector<f64>> {
        self.cov
            .as_ref()
            .map(|c| DVector::from_fn(c.nrows(), |i, _| c[(i, i)].max(0.0).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_basis, BasisKind};
    use crate::estimation::project_sample;
    use crate::function_space::Grid;
    use crate::model::{simulate, FGarchSpec, InnovationGen};

    fn linear_series(d: f64, a: f64, n: usize) -> CoefSeries {
        // noiseless B = 0 data: y_i = d + a y_{i-1} + deterministic shocks
        let mut ys = vec![d / (1.0 - a)];
        for i in 1..n {
            let shock = 0.3 * d * ((i * 7 % 11) as f64 / 11.0 - 0.5);
            ys.push(d + a * ys[i - 1] + shock);
        }
        CoefSeries::from_scalars(&ys).unwrap()
    }

    #[test]
    fn rejects_short_samples() {
        let s = CoefSeries::from_scalars(&[1.0; 10]).unwrap();
        assert!(matches!(fit(&s, &FitOptions::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn fitted_objective_not_above_truth() {
        let g = Grid::new(100).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        let basis = make_basis(BasisKind::Bridge, 1, g).unwrap();
        for seed in 0..3 {
            let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, seed), 300, 300).unwrap();
            let series = project_sample(&sim.y, &basis).unwrap();
            let res = fit(&series, &FitOptions::default()).unwrap();
            let d1 = crate::basis::project(spec.delta(), &basis).unwrap()[0];
            let truth = Theta::scalar(d1, 0.4, 0.4);
            assert!(res.objective_value <= objective(&truth, &series).unwrap());
            assert!(ThetaBounds::default().contains(&res.theta_hat));
        }
    }

    #[test]
    fn sign_flip_leaves_functions_unchanged() {
        let g = Grid::new(80).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, 5), 200, 200).unwrap();
        let basis = make_basis(BasisKind::Fourier, 2, g).unwrap();
        let flipped = basis.with_flipped_sign(0);
        let a = fit(&project_sample(&sim.y, &basis).unwrap(), &FitOptions::default()).unwrap();
        let b = fit(&project_sample(&sim.y, &flipped).unwrap(), &FitOptions::default()).unwrap();
        let (fa, fb) = (a.functions.unwrap(), b.functions.unwrap());
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-8);
        assert!(close(fa.delta_hat.values(), fb.delta_hat.values()));
        assert!(close(fa.alpha_hat.values(), fb.alpha_hat.values()));
        assert!(close(fa.beta_hat.values(), fb.beta_hat.values()));
        assert!((a.theta_hat.d[0] + b.theta_hat.d[0]).abs() < 1e-12);
    }

    #[test]
    fn nonnegativity_violations_are_reported() {
        let g = Grid::new(30).unwrap();
        let basis = make_basis(BasisKind::Fourier, 2, g).unwrap();
        let f = FittedFunctions {
            delta_hat: reconstruct_curve(&[0.1, 0.5], &basis).unwrap(),
            alpha_hat: reconstruct_kernel(&DMatrix::from_element(2, 2, 0.1), &basis).unwrap(),
            beta_hat: Kernel2D::zeros(g),
        };
        let w = nonnegativity_warnings(&f);
        assert_eq!(w.len(), 2);
        assert!(w[0].starts_with("delta_hat"));
    }

    #[test]
    fn report_layout() {
        let g = Grid::new(40).unwrap();
        let spec = FGarchSpec::paper_preset(g);
        let basis = make_basis(BasisKind::Bridge, 1, g).unwrap();
        let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, 1), 200, 200).unwrap();
        let opts = FitOptions { covariance: Some(SandwichForm::Robust), ..Default::default() };
        let res = fit(&project_sample(&sim.y, &basis).unwrap(), &opts).unwrap();
        let rep: FitReport = serde_json::from_str(&res.to_json().unwrap()).unwrap();
        assert_eq!(rep.theta, res.theta_hat.to_flat());
        assert_eq!(rep.cov.as_ref().unwrap().len(), 9);
        assert_eq!(rep.alpha_hat.as_ref().unwrap().len(), 1600);
        assert_eq!(rep.basis, Some(BasisKind::Bridge));
        assert_eq!(rep.grid_t, Some(40));
    }

    #[test]
    fn deterministic_selection() {
        let series = linear_series(0.02, 0.5, 100);
        let a = fit(&series, &FitOptions::default()).unwrap();
        let b = fit(&series, &FitOptions::default()).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.best_start, b.best_start);
    }
}
