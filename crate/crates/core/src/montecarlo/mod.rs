//! Direct and exponentially tilted simulation of the matrix walk, sample
//! cumulants, target functions and the bias term `b_φ`.

mod bias;
pub mod rng;
mod sampler;
mod stats;
mod target;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_of, Direction};

pub use bias::{b_phi_spectral, estimate_b_phi, BiasEstimate};
pub use sampler::{simulate, simulate_with, tilted_simulate, tilted_simulate_stationary, tilted_simulate_with};
pub use stats::{jackknife_mean, sample_cumulants, SampleCumulants};
pub use target::TargetFunction;

/// Paths per parallel work item.
pub(crate) const CHUNK: usize = 4096;

/// Endpoints and log-norms of `R` independent paths of length `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub n: usize,
    pub x0: Direction,
    pub seed: u64,
    pub log_norms: Vec<f64>,
    /// Row-major `R × d` endpoint coordinates.
    pub endpoints: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.log_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn endpoint(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.endpoints[k * d..(k + 1) * d]
    }

    pub fn endpoint_direction(&self, k: usize) -> Direction {
        Direction::project(self.endpoint(k), self.x0.space(), self.x0.norm()).expect("endpoints are unit vectors")
    }

    /// Angle of endpoint `k` (d = 2).
    pub fn endpoint_angle(&self, k: usize) -> f64 {
        angle_of(self.endpoint(k), self.x0.space())
    }
}

/// Paths drawn from a tilted proposal with their likelihood ratios against
/// the original law. Rejected paths are not stored but count towards
/// `attempted`, so estimators divide by `attempted`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSampleSet {
    pub samples: SampleSet,
    pub weights: Vec<f64>,
    pub s: f64,
    pub attempted: usize,
    /// Paths dropped because the log-weight exceeded [`MAX_LOG_WEIGHT`].
    pub rejected: usize,
    /// Grid node the start point was snapped to; `None` for stationary starts.
    pub snapped_node: Option<usize>,
    /// Per-path start nodes drawn from the grid's tilted stationary weights,
    /// an approximation of the exact stationary start.
    pub stationary_starts: Option<Vec<usize>>,
}

pub const MAX_LOG_WEIGHT: f64 = 700.0;

impl WeightedSampleSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
