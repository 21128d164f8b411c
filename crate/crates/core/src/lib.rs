//! Products of i.i.d. random matrices: exact finite-support ensembles, the
//! projective action and its log-norm cocycle, a discretized transfer
//! operator with its dominant eigen-triple, cumulants and the Cramér series,
//! exponentially tilted Monte Carlo, and the prediction functions for the
//! Berry-Esseen, Edgeworth, moderate deviation and local limit statements.
//!
//! The spectral solver works in dimension 2 on a one-dimensional angle grid.
//! Monte Carlo and geometry work in any dimension.

pub mod ensembles;
pub mod error;
pub mod geometry;
pub mod io;
pub mod limits;
pub mod montecarlo;
pub mod par;
pub mod smoothing;
pub mod spectral;

pub use ensembles::{ClassTag, ConditionReport, Ensemble, MatrixGauges};
pub use error::{Error, Result};
pub use geometry::{Direction, NormKind, Space};
pub use par::Execution;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
