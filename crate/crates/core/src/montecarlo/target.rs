use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Direction, NormKind, Space};
use crate::spectral::AngleGrid;

use super::rng::stream_rng;

/// Bounded test function on directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetFunction {
    ConstantOne,
    FirstCoordinate,
    /// `x₁ − mean`, with `mean` the stationary average of `x₁`.
    CenteredFirstCoordinate { mean: f64 },
}

impl TargetFunction {
    pub const NAMES: &'static [&'static str] = &["constant-one", "first-coordinate", "centered-first-coordinate"];

    /// Built-in by name; the centered variant uses stationary weights on a
    /// grid to find the mean.
    pub fn by_name(name: &str, stationary: Option<(&AngleGrid, &[f64])>) -> Result<Self> {
        match name {
            "constant-one" => Ok(TargetFunction::ConstantOne),
            "first-coordinate" => Ok(TargetFunction::FirstCoordinate),
            "centered-first-coordinate" => {
                let (grid, nu) = stationary
                    .ok_or_else(|| Error::invalid("centered target needs stationary weights"))?;
                Ok(TargetFunction::centered_first_coordinate(grid, nu))
            }
            other => Err(Error::invalid(format!("unknown target function '{other}'"))),
        }
    }

    pub fn centered_first_coordinate(grid: &AngleGrid, nu: &[f64]) -> Self {
        let mean = nu.iter().enumerate().map(|(j, w)| w * grid.point(j)[0]).sum();
        TargetFunction::CenteredFirstCoordinate { mean }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetFunction::ConstantOne => "constant-one",
            TargetFunction::FirstCoordinate => "first-coordinate",
            TargetFunction::CenteredFirstCoordinate { .. } => "centered-first-coordinate",
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TargetFunction::ConstantOne => 1.0,
            TargetFunction::FirstCoordinate => x[0],
            TargetFunction::CenteredFirstCoordinate { mean } => x[0] - mean,
        }
    }

    /// Values on grid nodes.
    pub fn on_grid(&self, grid: &AngleGrid) -> Vec<f64> {
        (0..grid.len()).map(|j| self.eval(&grid.point(j))).collect()
    }

    /// Largest sampled `|φ(x) − φ(y)| / d(x, y)^γ` over random planar pairs.
    pub fn holder_diagnostic(&self, space: Space, norm: NormKind, gamma: f64, pairs: usize, seed: u64) -> f64 {
        let mut rng = stream_rng(seed, 0);
        let top = match space {
            Space::Projective => std::f64::consts::PI,
            Space::PositiveSphere => std::f64::consts::FRAC_PI_2,
        };
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let x = Direction::from_angle(rng.gen::<f64>() * top, space, norm).unwrap();
            let y = Direction::from_angle(rng.gen::<f64>() * top, space, norm).unwrap();
            let d = distance(&x, &y).unwrap();
            if d > 1e-12 {
                worst = worst.max((self.eval(x.coords()) - self.eval(y.coords())).abs() / d.powf(gamma));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridKind;

    #[test]
    fn builtins() {
        let grid = AngleGrid::new(GridKind::QuadrantArc, 64, NormKind::Euclidean).unwrap();
        let mut nu = vec![0.0; grid.len()];
        nu[32] = 1.0;
        let c = TargetFunction::by_name("centered-first-coordinate", Some((&grid, &nu))).unwrap();
        assert!(c.eval(&[std::f64::consts::FRAC_1_SQRT_2, 0.0]).abs() < 1e-15);
        assert_eq!(TargetFunction::by_name("constant-one", None).unwrap().eval(&[0.3, 0.7]), 1.0);
        assert_eq!(TargetFunction::by_name("first-coordinate", None).unwrap().eval(&[0.3, 0.7]), 0.3);
        assert!(TargetFunction::by_name("centered-first-coordinate", None).is_err());
        assert!(TargetFunction::by_name("nope", None).is_err());
    }

    #[test]
    fn holder_diagnostic_is_finite() {
        let f = TargetFunction::FirstCoordinate;
        let h = f.holder_diagnostic(Space::Projective, NormKind::Euclidean, 1.0, 10_000, 3);
        assert!(h.is_finite() && h > 0.5);
        assert_eq!(TargetFunction::ConstantOne.holder_diagnostic(Space::Projective, NormKind::Euclidean, 0.5, 100, 3), 0.0);
    }
}
