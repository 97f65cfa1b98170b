//! Monte Carlo replication of the scalar simulation study: the preset
//! process projected on the single function `√30 t(1−t)` and fitted with
//! `M = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{make_basis, project, BasisKind};
use crate::error::{Error, Result};
use crate::estimation::{fit, project_sample, FitOptions};
use crate::function_space::Grid;
use crate::model::{simulate_with_rng, FGarchSpec, InnovationGen};
use crate::rng;

/// Reference means and replication standard deviations of `(d̂₁, â₁₁, b̂₁₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    /// `None` for the population row.
    pub n: Option<usize>,
    pub mean: [f64; 3],
    pub sd: Option<[f64; 3]>,
}

pub const REFERENCE: [ReferenceRow; 4] = [
    ReferenceRow { n: Some(300), mean: [0.013, 0.420, 0.306], sd: Some([0.003, 0.058, 0.086]) },
    ReferenceRow { n: Some(600), mean: [0.011, 0.412, 0.344], sd: Some([0.002, 0.042, 0.064]) },
    ReferenceRow { n: Some(1200), mean: [0.010, 0.408, 0.369], sd: Some([0.001, 0.028, 0.045]) },
    ReferenceRow { n: None, mean: [0.009, 0.400, 0.400], sd: None },
];

pub fn reference_for(n: usize) -> Option<&'static ReferenceRow> {
    REFERENCE.iter().find(|r| r.n == Some(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplicationConfig {
    pub grid_t: usize,
    pub n_values: Vec<usize>,
    pub reps: usize,
    pub burnin: usize,
    pub rate: f64,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self {
            grid_t: 285,
            n_values: vec![300, 600, 1200],
            reps: 200,
            burnin: 1000,
            rate: 200.0,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

/// Estimates of one replication, `[d̂₁, â₁₁, b̂₁₁]`.
pub type Estimate = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub n: usize,
    /// Replications whose fit succeeded.
    pub reps: usize,
    pub failures: usize,
    pub mean: [f64; 3],
    /// Sample standard deviations; absent for fewer than two replications.
    pub sd: Option<[f64; 3]>,
    pub mean_abs_error: [f64; 3],
    pub truth: [f64; 3],
    pub reference: Option<ReferenceRow>,
    #[serde(skip)]
    pub estimates: Vec<Estimate>,
}

/// One replication: simulate from stream `(seed, index)`, project, fit.
pub fn replicate_once(
    spec: &FGarchSpec,
    cfg: &ReplicationConfig,
    n: usize,
    index: u64,
) -> Result<Estimate> {
    let grid = spec.grid();
    let basis = make_basis(BasisKind::Bridge, 1, grid)?;
    let gen = InnovationGen::ou_bridge(cfg.rate, cfg.seed);
    let mut r = rng::stream(cfg.seed, index);
    let sim = simulate_with_rng(spec, &gen, n, cfg.burnin, &mut r)?;
    let series = project_sample(&sim.y, &basis)?;
    let opts = FitOptions { seed: cfg.seed ^ index, ..cfg.fit };
    let th = fit(&series, &opts)?.theta_hat;
    Ok([th.d[0], th.a[(0, 0)], th.b[(0, 0)]])
}

fn summarize(n: usize, truth: [f64; 3], estimates: Vec<Estimate>, failures: usize) -> ReplicationRow {
    let k = estimates.len();
    let mut mean = [0.0; 3];
    let mut mae = [0.0; 3];
    for e in &estimates {
        for p in 0..3 {
            mean[p] += e[p] / k as f64;
            mae[p] += (e[p] - truth[p]).abs() / k as f64;
        }
    }
    let sd = (k >= 2).then(|| {
        let mut v = [0.0; 3];
        for e in &estimates {
            for p in 0..3 {
                v[p] += (e[p] - mean[p]).powi(2);
            }
        }
        v.map(|s| (s / (k - 1) as f64).sqrt())
    });
    ReplicationRow {
        n,
        reps: k,
        failures,
        mean,
        sd,
        mean_abs_error: mae,
        truth,
        reference: reference_for(n).copied(),
        estimates,
    }
}

/// Runs `reps` simulate-and-fit replications for each sample size.
///
/// Replication `r` at the `k`-th sample size uses random stream
/// `(k << 32) | r`, so rows are independent and the output does not depend
/// on the number of worker threads. Replications whose fit fails are
/// counted in `failures` and left out of the summaries.
pub fn replicate_table1(cfg: &ReplicationConfig) -> Result<Vec<ReplicationRow>> {
    if cfg.reps == 0 {
        return Err(Error::Argument("at least one replication is required".into()));
    }
    let grid = Grid::new(cfg.grid_t)?;
    let spec = FGarchSpec::paper_preset(grid);
    let basis = make_basis(BasisKind::Bridge, 1, grid)?;
    let truth = [project(spec.delta(), &basis)?[0], 0.4, 0.4];
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for (k, &n) in cfg.n_values.iter().enumerate() {
        let outcomes: Vec<Result<Estimate>> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| replicate_once(&spec, cfg, n, ((k as u64) << 32) | r))
            .collect();
        let mut estimates = Vec::with_capacity(cfg.reps);
        let mut failures = 0;
        for o in outcomes {
            match o {
                Ok(e) => estimates.push(e),
                Err(Error::NonConvergence(_)) => failures += 1,
                Err(e) => return Err(e),
            }
        }
        if estimates.is_empty() {
            return Err(Error::NonConvergence(format!("every replication at n = {n} failed")));
        }
        rows.push(summarize(n, truth, estimates, failures));
    }
    Ok(rows)
}
