use std::f64::consts::PI;

use libm::erfc;

use crate::error::{Error, Result};
use crate::spectral::CramerSeries;

use super::Tail;

pub fn normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// `ν(φ)·Φ(y)`.
pub fn normal_prediction(y: f64, nu_phi: f64) -> f64 {
    nu_phi * normal_cdf(y)
}

/// `ν(φ)[Φ(y) + γ₃/(6σ³√n)(1−y²)ϕ(y)] − b_φ/(σ√n)·ϕ(y)`.
pub fn edgeworth_prediction(y: f64, n: usize, nu_phi: f64, b_phi: f64, sigma: f64, gamma3: f64) -> Result<f64> {
    if !(sigma > 1e-12) {
        return Err(Error::DegenerateVariance(sigma * sigma));
    }
    let rn = (n as f64).sqrt();
    let pdf = normal_pdf(y);
    Ok(nu_phi * (normal_cdf(y) + gamma3 / (6.0 * sigma.powi(3) * rn) * (1.0 - y * y) * pdf) - b_phi / (sigma * rn) * pdf)
}

/// Predicted tail ratio: `exp(y³/√n·ζ(y/√n))` for the upper tail
/// `P(S ≥ σ√n y)/(1−Φ(y))`, `exp(−y³/√n·ζ(−y/√n))` for the lower tail
/// `P(S ≤ −σ√n y)/Φ(−y)`.
pub fn md_prediction(y: f64, n: usize, zeta: &CramerSeries, tail: Tail) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::invalid("moderate deviation level must be nonnegative"));
    }
    let rn = (n as f64).sqrt();
    let t = y / rn;
    Ok(match tail {
        Tail::Upper => (y.powi(3) / rn * zeta.eval(t)?).exp(),
        Tail::Lower => (-y.powi(3) / rn * zeta.eval(-t)?).exp(),
    })
}

/// `P(S − σ√n y ∈ [a₁, a₂]) ≈ (a₂−a₁)/(σ√(2πn))·exp(−y²/2 + y³/√n·ζ(y/√n))`.
pub fn llt_prediction(a1: f64, a2: f64, y: f64, n: usize, sigma: f64, zeta: &CramerSeries) -> Result<f64> {
    if !(a1 < a2) {
        return Err(Error::invalid("interval must satisfy a1 < a2"));
    }
    if !(sigma > 1e-12) {
        return Err(Error::DegenerateVariance(sigma * sigma));
    }
    let rn = (n as f64).sqrt();
    let t = y / rn;
    Ok((a2 - a1) / (sigma * (2.0 * PI * n as f64).sqrt()) * (-0.5 * y * y + y.powi(3) / rn * zeta.eval(t)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::CumulantSet;

    fn series(c0: f64) -> CramerSeries {
        CramerSeries { coeffs: [c0, 0.0, 0.0], radius: 1.0 }
    }

    #[test]
    fn normal_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-5.0) / 2.866_515_718_791_933e-7 - 1.0).abs() < 1e-13);
        assert!((normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn edgeworth_examples() {
        for y in [-2.0, 0.0, 1.3] {
            assert_eq!(edgeworth_prediction(y, 100, 1.0, 0.0, 0.7, 0.0).unwrap(), normal_cdf(y));
            let far = edgeworth_prediction(y, 1 << 60, 2.0, 0.3, 0.7, 0.4).unwrap();
            assert!((far - 2.0 * normal_cdf(y)).abs() < 1e-8);
        }
        let sigma = 0.5f64;
        let v = edgeworth_prediction(0.0, 64, 1.0, 0.0, sigma, 6.0 * sigma.powi(3)).unwrap();
        assert!((v - (0.5 + 0.398_942_280_401_432_7 / 8.0)).abs() < 1e-15);
        assert!(matches!(edgeworth_prediction(0.0, 64, 1.0, 0.0, 0.0, 0.0), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn md_examples() {
        let z = series(0.3);
        assert_eq!(md_prediction(0.0, 100, &z, Tail::Upper).unwrap(), 1.0);
        let v = md_prediction(2.0, 100, &z, Tail::Upper).unwrap();
        assert!((v - (0.3f64 * 8.0 / 10.0).exp()).abs() < 1e-15);
        let v = md_prediction(2.0, 100, &z, Tail::Lower).unwrap();
        assert!((v - (-0.3f64 * 8.0 / 10.0).exp()).abs() < 1e-15);
        assert!(matches!(md_prediction(20.0, 100, &z, Tail::Upper), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn md_lower_tail_uses_mirrored_argument() {
        let z = CramerSeries { coeffs: [0.0, 1.0, 0.0], radius: 1.0 };
        let (y, n) = (2.0, 400);
        let t: f64 = 0.1;
        assert!((md_prediction(y, n, &z, Tail::Lower).unwrap() - (-(8.0 / 20.0) * -t).exp()).abs() < 1e-15);
    }

    #[test]
    fn llt_examples() {
        let z = CumulantSet::from_gammas([0.0, 1.0, 0.4, 0.1, 0.0], 1.0).cramer().unwrap();
        let base = llt_prediction(-0.5, 0.5, 0.0, 100, 0.3, &z).unwrap();
        assert!((base - 1.0 / (0.3 * (2.0 * PI * 100.0).sqrt())).abs() < 1e-15);
        let doubled = llt_prediction(-0.5, 0.5, 0.0, 200, 0.3, &z).unwrap();
        assert!((doubled / base - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(llt_prediction(0.5, -0.5, 0.0, 100, 0.3, &z).is_err());
    }
}
