use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::RunConfig;

/// Functional GARCH(1,1): simulation, diagnostics, estimation and data
/// preparation.
#[derive(Debug, Parser)]
#[command(name = "fgarch", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true, env = "FGARCH_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    Fpca,
    Fourier,
    Bspline,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate return curves from a preset model.
    Simulate {
        /// Built-in preset name or path to a preset JSON file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "grid-T")]
        grid_t: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
    },
    /// Fit the projected model to a curves file.
    Estimate {
        /// Wide curves CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        basis: Option<BasisArg>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        /// Also compute the sandwich covariance.
        #[arg(long)]
        cov: bool,
    },
    /// Monte Carlo stationarity diagnostics for a preset model.
    Diagnose {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long = "grid-T")]
        grid_t: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Functional principal components of the squared curves.
    Fpca {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Convert long intraday prices to log-return curves.
    Ingest {
        /// Long prices CSV `day,slot,price`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Returns per complete day.
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Monte Carlo replication of the scalar simulation study.
    #[command(name = "replicate-table1")]
    ReplicateTable1 {
        /// Sample sizes; repeat the flag for several.
        #[arg(long)]
        n: Vec<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long = "grid-T")]
        grid_t: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
    },
}

fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{line}");
}

fn run(cli: Cli) -> fgarch::Result<()> {
    let mut cfg = RunConfig::load(cli.common.config.as_deref())?;
    cfg.seed = cli.common.seed.or(cfg.seed);
    cfg.out = cli.common.out.or(cfg.out);
    cfg.workers = cli.common.workers.or(cfg.workers);
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(fgarch::Error::Argument("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| fgarch::Error::Argument(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { preset, n, grid_t, burnin } => {
            cfg.preset = preset.or(cfg.preset);
            cfg.n = n.or(cfg.n);
            cfg.grid_t = grid_t.or(cfg.grid_t);
            cfg.burnin = burnin.or(cfg.burnin);
            commands::simulate(&cfg)
        }
        Command::Estimate { input, basis, m, c1, c2, cov } => {
            cfg.input = input.or(cfg.input);
            cfg.basis = basis
                .map(|b| match b {
                    BasisArg::Fpca => fgarch::basis::BasisKind::Fpca,
                    BasisArg::Fourier => fgarch::basis::BasisKind::Fourier,
                    BasisArg::Bspline => fgarch::basis::BasisKind::Bspline,
                })
                .or(cfg.basis);
            cfg.m = m.or(cfg.m);
            cfg.c1 = c1.or(cfg.c1);
            cfg.c2 = c2.or(cfg.c2);
            cfg.cov = Some(cov || cfg.cov.unwrap_or(false));
            commands::estimate(&cfg)
        }
        Command::Diagnose { preset, grid_t, reps } => {
            cfg.preset = preset.or(cfg.preset);
            cfg.grid_t = grid_t.or(cfg.grid_t);
            cfg.reps = reps.or(cfg.reps);
            commands::diagnose(&cfg)
        }
        Command::Fpca { input, m } => {
            cfg.input = input.or(cfg.input);
            cfg.m = m.or(cfg.m);
            commands::fpca(&cfg)
        }
        Command::Ingest { input, slots } => {
            cfg.input = input.or(cfg.input);
            cfg.slots = slots.or(cfg.slots);
            commands::ingest(&cfg)
        }
        Command::ReplicateTable1 { n, reps, grid_t, burnin, c1, c2 } => {
            if !n.is_empty() {
                cfg.n_values = Some(n);
            }
            cfg.reps = reps.or(cfg.reps);
            cfg.grid_t = grid_t.or(cfg.grid_t);
            cfg.burnin = burnin.or(cfg.burnin);
            cfg.c1 = c1.or(cfg.c1);
            cfg.c2 = c2.or(cfg.c2);
            commands::replicate_table1(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report_error("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
