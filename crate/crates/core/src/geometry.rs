//! Points of the projective space / positive sphere, the projective action
//! `g·x = gx/|gx|` with its log-norm cocycle, and the two metrics: the
//! angular distance `|sin θ(x, y)|` on the projective space and the Hilbert
//! cross-ratio metric on the positive sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vector norm used for `|x|`, `|gx|` and the normalization of directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Euclidean,
    L1,
}

impl NormKind {
    #[inline]
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// Lines through the origin; `x` and `-x` are identified.
    Projective,
    /// Unit vectors with nonnegative coordinates.
    PositiveSphere,
}

/// Coordinates below this magnitude (after normalization) are treated as zero
/// when fixing the projective sign.
const SIGN_EPS: f64 = 1e-14;

/// Canonical unit representative of a point of the projective space or the
/// positive sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    coords: Vec<f64>,
    space: Space,
    norm: NormKind,
}

impl Direction {
    /// Normalizes `v` and, on the projective space, flips the sign so that the
    /// first nonzero coordinate is positive.
    pub fn project(v: &[f64], space: Space, norm: NormKind) -> Result<Self> {
        let len = norm.norm(v);
        if !(len > 1e-300) || !len.is_finite() {
            return Err(Error::ZeroVector);
        }
        if space == Space::PositiveSphere && v.iter().any(|&c| c < 0.0) {
            return Err(Error::NegativeCoordinate);
        }
        let mut coords: Vec<f64> = v.iter().map(|c| c / len).collect();
        if space == Space::Projective {
            canonical_sign(&mut coords);
        }
        Ok(Direction { coords, space, norm })
    }

    /// Unit vector at angle `theta` in the plane (d = 2).
    pub fn from_angle(theta: f64, space: Space, norm: NormKind) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let v = match space {
            // clamp tiny negative round-off at the ends of the quadrant
            Space::PositiveSphere => [c.max(0.0), s.max(0.0)],
            Space::Projective => [c, s],
        };
        Direction::project(&v, space, norm)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    /// Angle of the direction in the plane: in `[0, π)` on the projective
    /// line, in `[0, π/2]` on the positive quadrant.
    pub fn angle(&self) -> f64 {
        angle_of(&self.coords, self.space)
    }
}

/// Angle of a nonzero planar vector, reduced to the parameter range of `space`.
#[inline]
pub fn angle_of(v: &[f64], space: Space) -> f64 {
    let a = v[1].atan2(v[0]);
    match space {
        Space::Projective => {
            let r = a.rem_euclid(std::f64::consts::PI);
            // rem_euclid may round up to exactly π
            if r >= std::f64::consts::PI {
                0.0
            } else {
                r
            }
        }
        Space::PositiveSphere => a.clamp(0.0, std::f64::consts::FRAC_PI_2),
    }
}

pub(crate) fn canonical_sign(coords: &mut [f64]) {
    if let Some(&first) = coords.iter().find(|c| c.abs() > SIGN_EPS) {
        if first < 0.0 {
            coords.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// `out = g x` for a row-major `d×d` matrix; returns `|gx|`.
#[inline]
pub fn apply_matrix(g: &[f64], x: &[f64], out: &mut [f64], norm: NormKind) -> f64 {
    let d = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &g[i * d..(i + 1) * d];
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    norm.norm(out)
}

/// Result of one step of the projective action.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionStep {
    pub image: Direction,
    /// `log|gx|`, natural log.
    pub log_gain: f64,
}

/// Applies the row-major matrix `g` to `x`.
pub fn act(g: &[f64], x: &Direction) -> Result<ActionStep> {
    let d = x.dim();
    if g.len() != d * d {
        return Err(Error::invalid(format!(
            "matrix with {} entries does not act on dimension {d}",
            g.len()
        )));
    }
    let mut out = vec![0.0; d];
    let len = apply_matrix(g, &x.coords, &mut out, x.norm);
    if !(len > 1e-300) {
        return Err(Error::CollapsedImage(len));
    }
    let image = Direction::project(&out, x.space, x.norm)?;
    Ok(ActionStep {
        image,
        log_gain: len.ln(),
    })
}

/// `m(x, y) = sup{λ > 0 : λ y ≤ x}` computed as the minimum ratio over the
/// coordinates where `y` is positive.
pub fn hilbert_min_ratio(x: &[f64], y: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for (&xi, &yi) in x.iter().zip(y) {
        if yi > 0.0 {
            m = m.min(xi / yi);
        }
    }
    if m.is_finite() {
        m
    } else {
        0.0
    }
}

/// Angular distance on the projective space, Hilbert cross-ratio metric on
/// the positive sphere. Always in `[0, 1]`.
pub fn distance(x: &Direction, y: &Direction) -> Result<f64> {
    if x.space != y.space || x.norm != y.norm || x.dim() != y.dim() {
        return Err(Error::SpaceMismatch);
    }
    Ok(match x.space {
        Space::Projective => sin_angle(&x.coords, &y.coords),
        Space::PositiveSphere => {
            let p = hilbert_min_ratio(&x.coords, &y.coords) * hilbert_min_ratio(&y.coords, &x.coords);
            ((1.0 - p) / (1.0 + p)).clamp(0.0, 1.0)
        }
    })
}

/// `|sin θ(x, y)|` through the wedge product, accurate for nearly parallel
/// vectors.
fn sin_angle(x: &[f64], y: &[f64]) -> f64 {
    let nx = NormKind::Euclidean.norm(x);
    let ny = NormKind::Euclidean.norm(y);
    let mut wedge = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let w = x[i] * y[j] - x[j] * y[i];
            wedge += w * w;
        }
    }
    (wedge.sqrt() / (nx * ny)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn dir(v: &[f64], space: Space, norm: NormKind) -> Direction {
        Direction::project(v, space, norm).unwrap()
    }

    #[test]
    fn projective_sign_convention() {
        let x = dir(&[0.0, -3.0], Space::Projective, NormKind::Euclidean);
        assert_eq!(x.coords(), &[0.0, 1.0]);
        let y = dir(&[-1.0, 2.0], Space::Projective, NormKind::Euclidean);
        assert!(y.coords()[0] > 0.0 && y.coords()[1] < 0.0);
    }

    #[test]
    fn positive_sphere_normalization() {
        let x = dir(&[3.0, 4.0], Space::PositiveSphere, NormKind::Euclidean);
        assert!((x.coords()[0] - 0.6).abs() < 1e-15);
        assert!((x.coords()[1] - 0.8).abs() < 1e-15);
        let y = dir(&[3.0, 1.0], Space::PositiveSphere, NormKind::L1);
        assert_eq!(y.coords(), &[0.75, 0.25]);
    }

    #[test]
    fn project_errors() {
        assert!(matches!(
            Direction::project(&[0.0, 0.0], Space::Projective, NormKind::Euclidean),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            Direction::project(&[1.0, -0.5], Space::PositiveSphere, NormKind::Euclidean),
            Err(Error::NegativeCoordinate)
        ));
    }

    #[test]
    fn act_examples() {
        let x = dir(&[1.0, 1.0], Space::Projective, NormKind::Euclidean);
        let step = act(&[2.0, 0.0, 0.0, 1.0], &x).unwrap();
        let s5 = 5f64.sqrt();
        assert!((step.image.coords()[0] - 2.0 / s5).abs() < 1e-15);
        assert!((step.image.coords()[1] - 1.0 / s5).abs() < 1e-15);
        assert!((step.log_gain - (2.5f64).sqrt().ln()).abs() < 1e-15);

        let id = act(&[1.0, 0.0, 0.0, 1.0], &x).unwrap();
        assert!(id.log_gain.abs() < 1e-15);
        assert!((id.image.coords()[0] - FRAC_1_SQRT_2).abs() < 1e-15);

        let two = act(&[2.0, 0.0, 0.0, 2.0], &x).unwrap();
        assert!((two.log_gain - 2f64.ln()).abs() < 1e-15);
        assert!((two.image.coords()[1] - x.coords()[1]).abs() < 1e-15);
    }

    #[test]
    fn act_collapse() {
        let x = dir(&[1.0, 0.0], Space::Projective, NormKind::Euclidean);
        assert!(matches!(act(&[0.0, 0.0, 0.0, 1.0], &x), Err(Error::CollapsedImage(_))));
    }

    #[test]
    fn distance_examples() {
        let e1 = dir(&[1.0, 0.0], Space::Projective, NormKind::Euclidean);
        let e2 = dir(&[0.0, 1.0], Space::Projective, NormKind::Euclidean);
        assert!((distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);

        let x = dir(&[1.0, 2.0], Space::Projective, NormKind::Euclidean);
        let minus_x = dir(&[-1.0, -2.0], Space::Projective, NormKind::Euclidean);
        assert!(distance(&x, &minus_x).unwrap() < 1e-15);

        let p = dir(&[0.6, 0.4], Space::PositiveSphere, NormKind::L1);
        let q = dir(&[0.4, 0.6], Space::PositiveSphere, NormKind::L1);
        assert!((hilbert_min_ratio(p.coords(), q.coords()) - 2.0 / 3.0).abs() < 1e-15);
        assert!((distance(&p, &q).unwrap() - 5.0 / 13.0).abs() < 1e-15);
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_space_mismatch() {
        let a = dir(&[1.0, 1.0], Space::Projective, NormKind::Euclidean);
        let b = dir(&[1.0, 1.0], Space::PositiveSphere, NormKind::Euclidean);
        assert!(matches!(distance(&a, &b), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn hilbert_boundary_points() {
        let e1 = dir(&[1.0, 0.0], Space::PositiveSphere, NormKind::Euclidean);
        let x = dir(&[1.0, 1.0], Space::PositiveSphere, NormKind::Euclidean);
        assert_eq!(distance(&e1, &x).unwrap(), 1.0);
    }

    #[test]
    fn angles() {
        let x = Direction::from_angle(3.0, Space::Projective, NormKind::Euclidean).unwrap();
        assert!((x.angle() - 3.0).abs() < 1e-12);
        let q = Direction::from_angle(FRAC_PI_2, Space::PositiveSphere, NormKind::L1).unwrap();
        assert!(q.coords()[0].abs() < 1e-15 && q.coords()[1] == 1.0);
        assert!((q.angle() - FRAC_PI_2).abs() < 1e-15);
    }
}
