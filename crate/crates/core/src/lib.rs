//! Functional GARCH(1,1) processes on `[0,1]`.
//!
//! The crate covers the full workflow for curve-valued conditional
//! heteroskedasticity:
//!
//! * [`function_space`]: grids, curves, kernels and the Riemann-sum calculus
//!   on them;
//! * [`basis`]: Fourier, B-spline and endpoint-vanishing polynomial bases and
//!   functional principal components;
//! * [`model`]: simulation with Gaussian process innovations, stationarity
//!   diagnostics and the backward series solution;
//! * [`estimation`]: basis-projected least squares with analytic gradients,
//!   sandwich covariance and volatility filtering;
//! * [`ingest`]: curve and intraday price files.
//!
//! ```
//! use fgarch::function_space::Grid;
//! use fgarch::model::{simulate, FGarchSpec, InnovationGen};
//!
//! let grid = Grid::new(64).unwrap();
//! let spec = FGarchSpec::paper_preset(grid);
//! let sim = simulate(&spec, &InnovationGen::ou_bridge(200.0, 7), 10, 100).unwrap();
//! assert_eq!(sim.y.len(), 10);
//! ```

pub mod basis;
pub mod error;
pub mod estimation;
pub mod function_space;
pub mod ingest;
pub mod model;
pub mod operator;
pub mod preset;
pub mod replication;
pub mod rng;

pub use error::{Error, Result};
