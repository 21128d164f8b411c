//! Transfer operator on a one-dimensional angle grid (d = 2), its dominant
//! eigen-triple, the curve `Λ(s) = log κ(s)` with cumulants and Cramér series,
//! and the tilted Markov kernel.

pub mod curve;
pub mod grid;
pub mod kernel;
pub mod operator;
pub mod solver;

pub use curve::{
    chebyshev_nodes, exponent_identity, lambda_curve, solve_tilt, zeta, CramerSeries, CumulantSet, LambdaCurve,
    CRAMER_TERMS, DEFAULT_NODES, DEFAULT_WINDOW, FIT_DEGREE,
};
pub use grid::{AngleGrid, GridKind};
pub use kernel::{tilted_kernel, Proposal, TiltedKernel};
pub use operator::{assemble, OperatorMatrix};
pub use solver::{dominant_triple, SolverOptions, SpectralSolution, SpectralSolver};
