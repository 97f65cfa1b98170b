//! Least-squares estimation of the projected parameters and its inference.

mod filter;
mod fit;
mod inference;
mod optimize;
mod recursion;
mod theta;

pub use filter::{delta_tilde, volatility_filter, VolatilityFilter};
pub use fit::{fit, ActiveConstraints, FitOptions, FitReport, FitResult, FittedFunctions, StartReport};
pub use inference::{asymptotic_cov, SandwichForm, MAX_CONDITION};
pub use recursion::{gradient, objective, objective_and_gradient, project_sample, shat_recursion, CoefSeries};
pub use theta::{Theta, ThetaBounds};
