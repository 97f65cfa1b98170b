//! The functional GARCH(1,1) process
//!
//! ```text
//! y_i(t)  = σ_i(t) ε_i(t)
//! σ_i²(t) = δ(t) + ∫ α(t,s) y_{i-1}²(s) ds + ∫ β(t,s) σ_{i-1}²(s) ds
//! ```
//!
//! with simulation, Monte Carlo stationarity diagnostics and the backward
//! series representation of the volatility.

mod diagnostics;
mod innovation;
mod series;
mod simulate;
mod spec;

pub use diagnostics::{
    coupling_decay, gamma_kernel, log_linear_fit, lyapunov_l2, moment_norm, CouplingRow,
    LinearFit, McSummary, NormKind,
};
pub use innovation::{ou_innovation, InnovationGen, InnovationKind};
pub use series::series_solution;
pub use simulate::{simulate, simulate_from_innovations, simulate_with_rng, SimResult};
pub use spec::FGarchSpec;
