//! Inexact inertial ADMM for `min_x f(x) + g(Lx)` with a relative-error
//! criterion on the second block, together with rate diagnostics, LASSO
//! oracles, data loading and benchmark plumbing.
//!
//! ```
//! use inertial_admm::{run, AdmmConfig, Problem, Matrix, Vector};
//!
//! let a = Matrix::from_row_slice(1, 1, &[1.0]);
//! let b = Vector::from_element(1, 2.0);
//! let out = run(&Problem::lasso(a, b, 1.0).unwrap(), &AdmmConfig::default(), None).unwrap();
//! assert!((out.x[0] - 1.0).abs() < 1e-5);
//! ```

pub mod admm;
pub mod data;
pub mod error;
pub mod harness;
pub mod inner;
pub mod oracle;
pub mod prox;
pub mod rates;
pub mod spaces;

pub use admm::{run, run_observed, AdmmConfig, AdmmState, InertialRule, IterateRecord, Problem, RunOutput, Schedule, Status};
pub use data::Dataset;
pub use error::{Error, Result};
pub use harness::{RunSummary, SolveOutcome};
pub use inner::{ApproxSolution, LeastSquares, SecondBlock};
pub use oracle::ReferencePoint;
pub use prox::FirstBlock;
pub use rates::RateReport;
pub use spaces::{GammaMetric, LinearOp, Matrix, PrimalDualPoint, Vector};
