use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_of, Direction, NormKind, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// `θ ∈ [0, π)`, periodic; nodes `jπ/M`, `j < M`.
    ProjectiveLine,
    /// `θ ∈ [0, π/2]`, clamped; nodes `jπ/(2M)`, `j ≤ M`.
    QuadrantArc,
}

/// Uniform angle grid on the projective line or the positive quadrant (d = 2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub kind: GridKind,
    /// Number of intervals `M`.
    pub intervals: usize,
    pub norm: NormKind,
}

pub const MIN_INTERVALS: usize = 64;

impl AngleGrid {
    pub fn new(kind: GridKind, intervals: usize, norm: NormKind) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(Error::invalid(format!("grid needs at least {MIN_INTERVALS} intervals")));
        }
        Ok(AngleGrid { kind, intervals, norm })
    }

    /// Grid matching an ensemble's space.
    pub fn for_space(space: Space, intervals: usize, norm: NormKind) -> Result<Self> {
        let kind = match space {
            Space::Projective => GridKind::ProjectiveLine,
            Space::PositiveSphere => GridKind::QuadrantArc,
        };
        AngleGrid::new(kind, intervals, norm)
    }

    pub fn space(&self) -> Space {
        match self.kind {
            GridKind::ProjectiveLine => Space::Projective,
            GridKind::QuadrantArc => Space::PositiveSphere,
        }
    }

    pub fn len(&self) -> usize {
        match self.kind {
            GridKind::ProjectiveLine => self.intervals,
            GridKind::QuadrantArc => self.intervals + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        match self.kind {
            GridKind::ProjectiveLine => PI / self.intervals as f64,
            GridKind::QuadrantArc => FRAC_PI_2 / self.intervals as f64,
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.angle(j)).collect()
    }

    /// Unit vector (under the grid norm) at node `j`.
    pub fn point(&self, j: usize) -> [f64; 2] {
        let theta = self.angle(j);
        let (s, c) = theta.sin_cos();
        let v = match self.kind {
            GridKind::QuadrantArc => [c.max(0.0), s.max(0.0)],
            GridKind::ProjectiveLine => [c, s],
        };
        let n = self.norm.norm(&v);
        [v[0] / n, v[1] / n]
    }

    pub fn direction(&self, j: usize) -> Direction {
        Direction::project(&self.point(j), self.space(), self.norm).expect("grid nodes are unit vectors")
    }

    /// Linear-interpolation stencil `(k0, k1, w1)` at angle `theta`: the value
    /// is `(1 - w1) f[k0] + w1 f[k1]`.
    #[inline]
    pub fn stencil(&self, theta: f64) -> (usize, usize, f64) {
        let u = theta / self.step();
        match self.kind {
            GridKind::ProjectiveLine => {
                let m = self.intervals;
                let fl = u.floor();
                let frac = u - fl;
                let k0 = (fl as i64).rem_euclid(m as i64) as usize;
                (k0, (k0 + 1) % m, frac)
            }
            GridKind::QuadrantArc => {
                let m = self.intervals;
                let u = u.clamp(0.0, m as f64);
                let k0 = (u.floor() as usize).min(m - 1);
                (k0, k0 + 1, u - k0 as f64)
            }
        }
    }

    /// Stencil at the direction of a nonzero planar vector.
    #[inline]
    pub fn stencil_of(&self, v: &[f64]) -> (usize, usize, f64) {
        self.stencil(angle_of(v, self.space()))
    }

    #[inline]
    pub fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        let (k0, k1, w) = self.stencil(theta);
        (1.0 - w) * values[k0] + w * values[k1]
    }

    pub fn nearest(&self, theta: f64) -> usize {
        let (k0, k1, w) = self.stencil(theta);
        if w < 0.5 {
            k0
        } else {
            k1
        }
    }
}
