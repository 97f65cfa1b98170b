use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use fgarch::basis::{fpca as fpca_basis, make_basis, BasisKind, FpcaDecomposition};
use fgarch::estimation::{delta_tilde, fit, project_sample, FitOptions, SandwichForm, ThetaBounds};
use fgarch::function_space::{Curve, Grid, Kernel2D};
use fgarch::ingest::{
    filter_days, prices_to_log_returns, read_curves, read_prices_csv, write_curves_on, write_labeled_curves,
};
use fgarch::model::{
    coupling_decay, log_linear_fit, lyapunov_l2, moment_norm, simulate as run_simulation, NormKind,
};
use fgarch::preset::Preset;
use fgarch::replication::{replicate_table1 as run_replication, ReplicationConfig};
use fgarch::{Error, Result};
use serde_json::json;

use crate::config::RunConfig;

/// Explained-variance share used to pick `M` for fPCA when none is given.
const FPCA_SHARE: f64 = 0.7;
const FPCA_MAX_M: usize = 5;

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn input_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::Argument("an --input file is required".into()))
}

fn load_preset(cfg: &RunConfig) -> Result<Preset> {
    let mut p = Preset::load(cfg.preset.as_deref().unwrap_or("paper_sim"))?;
    if let Some(t) = cfg.grid_t {
        p.grid_t = t;
    }
    if let Some(n) = cfg.n {
        p.n = n;
    }
    if let Some(b) = cfg.burnin {
        p.burnin = b;
    }
    if let Some(s) = cfg.seed {
        p.innovation.seed = s;
    }
    Ok(p)
}

fn write_curve_grid(path: &Path, c: &Curve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "value"])?;
    for (t, v) in c.grid().points().zip(c.values()) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are `t`, columns `s`.
fn write_kernel_grid(path: &Path, k: &Kernel2D) -> Result<()> {
    let g = k.grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=g.len()).map(|j| format!("s_{j}")));
    w.write_record(&header)?;
    for (j, t) in g.points().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(k.row(j).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let preset = load_preset(cfg)?;
    let spec = preset.spec()?;
    let grid = spec.grid();
    let sim = run_simulation(&spec, &preset.innovation, preset.n, preset.burnin)?;
    let dir = out_dir(cfg)?;
    for (name, curves) in [("y.csv", &sim.y), ("sigma2.csv", &sim.sigma2), ("eps.csv", &sim.eps)] {
        write_curves_on(grid, curves, File::create(dir.join(name))?)?;
    }
    let manifest = json!({
        "command": "simulate",
        "preset": cfg.preset.as_deref().unwrap_or("paper_sim"),
        "model": preset,
        "seed": preset.innovation.seed,
        "n": preset.n,
        "burnin": preset.burnin,
        "grid_T": grid.len(),
        "files": ["y.csv", "sigma2.csv", "eps.csv"],
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    println!("{}", json!({ "simulated": preset.n, "out": dir }));
    Ok(())
}

pub fn estimate(cfg: &RunConfig) -> Result<()> {
    let (_, sample) = read_curves(File::open(input_path(cfg)?)?)?;
    let Some(first) = sample.first() else {
        return Err(Error::Data("the curves file has no rows".into()));
    };
    let grid = first.grid();
    let kind = cfg.basis.unwrap_or(BasisKind::Fpca);
    let squares: Vec<Curve> = sample.iter().map(Curve::squared).collect();
    let (basis, explained) = match kind {
        BasisKind::Fpca => {
            let dec = FpcaDecomposition::new(&squares)?;
            let m = cfg.m.unwrap_or_else(|| dec.select_m(FPCA_SHARE, FPCA_MAX_M));
            (dec.basis(m)?, Some(dec.cumulative_explained()[m.min(grid.len()) - 1]))
        }
        other => (make_basis(other, cfg.m.unwrap_or(1), grid)?, None),
    };
    let series = project_sample(&sample, &basis)?;
    let defaults = ThetaBounds::default();
    let bounds = ThetaBounds::new(
        cfg.c1.unwrap_or(defaults.c1),
        cfg.c2.unwrap_or(defaults.c2),
        defaults.box_bound,
    )?;
    let opts = FitOptions {
        bounds,
        n_starts: cfg.starts.unwrap_or(FitOptions::default().n_starts),
        seed: cfg.seed.unwrap_or(0),
        covariance: cfg.cov.unwrap_or(false).then_some(SandwichForm::Robust),
        ..FitOptions::default()
    };
    let result = fit(&series, &opts)?;
    let functions = result.functions.as_ref().expect("projected series carries its basis");
    let tilde = delta_tilde(&functions.alpha_hat, &functions.beta_hat, &sample)?;

    let dir = out_dir(cfg)?;
    let mut report = serde_json::to_value(result.report())?;
    report["n"] = json!(sample.len());
    report["explained_share"] = json!(explained);
    report["delta_tilde"] = json!(tilde.values());
    write_json(&dir.join("fit.json"), &report)?;
    write_curve_grid(&dir.join("delta_hat.csv"), &functions.delta_hat)?;
    write_kernel_grid(&dir.join("alpha_hat.csv"), &functions.alpha_hat)?;
    write_kernel_grid(&dir.join("beta_hat.csv"), &functions.beta_hat)?;
    println!(
        "{}",
        json!({
            "basis": kind.to_string(),
            "M": basis.len(),
            "theta": result.theta_hat.to_flat(),
            "objective": result.objective_value,
            "std_errors": result.std_errors().map(|v| v.as_slice().to_vec()),
            "warnings": result.warnings,
        })
    );
    Ok(())
}

pub fn diagnose(cfg: &RunConfig) -> Result<()> {
    let preset = load_preset(cfg)?;
    let spec = preset.spec()?;
    let gen = preset.innovation;
    let reps = cfg.reps.unwrap_or(10_000);
    let lyap = lyapunov_l2(&spec, &gen, reps)?;
    let mut moments = Vec::new();
    for kind in [NormKind::Hs, NormKind::Sup] {
        for nu in [1.0, 2.0] {
            let m = moment_norm(&spec, &gen, nu, reps, kind)?;
            moments.push(json!({ "norm": kind, "nu": nu, "mean": m.mean, "stderr": m.stderr, "below_one": m.mean < 1.0 }));
        }
    }
    let ells = [1usize, 2, 4, 8, 16];
    let coupling = coupling_decay(&spec, &gen, &ells, reps.min(2000), 200)?;
    let x: Vec<f64> = ells.iter().map(|l| *l as f64).collect();
    let y: Vec<f64> = coupling.iter().map(|r| r.mean).collect();
    // identical paths (for example with zero kernels) have nothing to fit
    let decay = if y.iter().all(|v| *v == 0.0) {
        json!({ "slope": null, "r_squared": null, "note": "coupled paths coincide" })
    } else {
        serde_json::to_value(log_linear_fit(&x, &y)?)?
    };
    let report = json!({
        "command": "diagnose",
        "reps": reps,
        "seed": gen.seed,
        "grid_T": spec.grid().len(),
        "lyapunov": { "mean": lyap.mean, "stderr": lyap.stderr, "neg_inf": lyap.neg_inf, "negative": lyap.mean < 0.0 },
        "moments": moments,
        "coupling": coupling,
        "coupling_fit": decay,
    });
    let dir = out_dir(cfg)?;
    write_json(&dir.join("diagnose.json"), &report)?;
    println!("{report}");
    Ok(())
}

pub fn fpca(cfg: &RunConfig) -> Result<()> {
    let (_, sample) = read_curves(File::open(input_path(cfg)?)?)?;
    let squares: Vec<Curve> = sample.iter().map(Curve::squared).collect();
    let dec = FpcaDecomposition::new(&squares)?;
    let m = cfg.m.unwrap_or_else(|| dec.select_m(FPCA_SHARE, FPCA_MAX_M));
    let basis = if cfg.m.is_some() { fpca_basis(&squares, m)? } else { dec.basis(m)? };
    let dir = out_dir(cfg)?;
    let grid: Grid = squares[0].grid();
    write_curves_on(grid, basis.functions(), File::create(dir.join("eigenfunctions.csv"))?)?;
    let report = json!({
        "command": "fpca",
        "n": sample.len(),
        "M": m,
        "rank": dec.rank(),
        "eigenvalues": dec.eigenvalues(),
        "cumulative_explained": dec.cumulative_explained(),
    });
    write_json(&dir.join("fpca.json"), &report)?;
    println!(
        "{}",
        json!({ "M": m, "explained": &dec.cumulative_explained()[..m], "rank": dec.rank() })
    );
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let slots = cfg.slots.unwrap_or(78);
    if slots == 0 {
        return Err(Error::Argument("--slots must be at least 1".into()));
    }
    let (days, mut dropped) = read_prices_csv(input_path(cfg)?)?;
    let (kept, short) = filter_days(days, slots + 1);
    dropped.extend(short);
    let curves = prices_to_log_returns(&kept)?;
    let labels: Vec<String> = kept.iter().map(|d| d.day.clone()).collect();
    let dir = out_dir(cfg)?;
    write_labeled_curves(Grid::new(slots)?, &labels, &curves, File::create(dir.join("curves.csv"))?)?;
    let report = json!({ "command": "ingest", "slots": slots, "kept": labels.len(), "dropped": dropped });
    write_json(&dir.join("ingest.json"), &report)?;
    println!("{}", json!({ "kept": labels.len(), "dropped": dropped.len() }));
    Ok(())
}

pub fn replicate_table1(cfg: &RunConfig) -> Result<()> {
    let defaults = ReplicationConfig::default();
    let bounds = ThetaBounds::new(
        cfg.c1.unwrap_or(defaults.fit.bounds.c1),
        cfg.c2.unwrap_or(defaults.fit.bounds.c2),
        defaults.fit.bounds.box_bound,
    )?;
    let rc = ReplicationConfig {
        grid_t: cfg.grid_t.unwrap_or(defaults.grid_t),
        n_values: cfg.n_values.clone().or(cfg.n.map(|n| vec![n])).unwrap_or(defaults.n_values),
        reps: cfg.reps.unwrap_or(defaults.reps),
        burnin: cfg.burnin.unwrap_or(defaults.burnin),
        seed: cfg.seed.unwrap_or(0),
        fit: FitOptions { bounds, ..defaults.fit },
        ..defaults
    };
    let rows = run_replication(&rc)?;
    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_path(dir.join("table1.csv"))?;
    w.write_record([
        "n", "reps", "failures", "parameter", "mean", "sd", "mean_abs_error", "truth", "reference_mean", "reference_sd",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        for (p, name) in ["d1", "a11", "b11"].iter().enumerate() {
            w.write_record([
                r.n.to_string(),
                r.reps.to_string(),
                r.failures.to_string(),
                name.to_string(),
                r.mean[p].to_string(),
                opt(r.sd.map(|s| s[p])),
                r.mean_abs_error[p].to_string(),
                r.truth[p].to_string(),
                opt(r.reference.map(|x| x.mean[p])),
                opt(r.reference.and_then(|x| x.sd).map(|s| s[p])),
            ])?;
        }
    }
    w.flush()?;
    let summary = json!({ "command": "replicate-table1", "config": rc, "rows": rows });
    write_json(&dir.join("table1.json"), &summary)?;
    for r in &rows {
        println!("{}", json!({ "n": r.n, "reps": r.reps, "failures": r.failures, "mean": r.mean, "sd": r.sd }));
    }
    Ok(())
}
