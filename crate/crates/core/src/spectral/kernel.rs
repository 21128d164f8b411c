use serde::{Deserialize, Serialize};

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::geometry::angle_of;

use super::grid::AngleGrid;
use super::solver::SpectralSolution;

/// Transition weights of the tilted chain
/// `pᵢ|gᵢx|^s r̂(gᵢ·x) / (κ̂ r̂(x))`, renormalized per starting point.
///
/// Weights are tabulated on grid nodes and computed afresh at off-grid
/// points by [`TiltedKernel::proposal_at`]. Samplers use them as a proposal
/// only; the likelihood ratio `pᵢ/ŵᵢ(x)` keeps estimators exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedKernel {
    s: f64,
    kappa: f64,
    grid: AngleGrid,
    r_values: Vec<f64>,
    probs: Vec<f64>,
    matrices: Vec<[f64; 4]>,
    /// Node-major table: `node_weights[j * atoms + i]`.
    node_weights: Vec<f64>,
    node_normalizers: Vec<f64>,
    /// `π̂_s ∝ ν̂_s r̂_s` on the nodes, the stationary law of the tilted chain.
    stationary: Vec<f64>,
    /// Weights shared by every point when the ensemble is conformal.
    uniform: Option<Vec<f64>>,
}

/// Proposal at one point: images, log-gains, normalized weights and the
/// normalizer `Z(x)`.
#[derive(Clone, Debug, Default)]
pub struct Proposal {
    pub images: Vec<[f64; 2]>,
    pub log_gains: Vec<f64>,
    pub weights: Vec<f64>,
    pub normalizer: f64,
}

pub fn tilted_kernel(ens: &Ensemble, sol: &SpectralSolution) -> Result<TiltedKernel> {
    TiltedKernel::new(ens, sol)
}

impl TiltedKernel {
    pub fn new(ens: &Ensemble, sol: &SpectralSolution) -> Result<Self> {
        if ens.dim() != 2 {
            return Err(Error::UnsupportedDimension(ens.dim()));
        }
        if sol.grid.space() != ens.space() || sol.grid.norm != ens.norm() {
            return Err(Error::invalid("solution grid does not match the ensemble"));
        }
        let matrices = ens
            .atoms()
            .iter()
            .map(|a| [a.matrix[0], a.matrix[1], a.matrix[2], a.matrix[3]])
            .collect();
        let mut k = TiltedKernel {
            s: sol.s,
            kappa: sol.kappa,
            grid: sol.grid,
            r_values: sol.r_values.clone(),
            probs: ens.atoms().iter().map(|a| a.prob).collect(),
            matrices,
            node_weights: Vec::new(),
            node_normalizers: Vec::new(),
            stationary: Vec::new(),
            uniform: None,
        };
        let mut prop = Proposal::default();
        for j in 0..k.grid.len() {
            k.proposal_at(&k.grid.point(j), &mut prop)?;
            k.node_weights.extend_from_slice(&prop.weights);
            k.node_normalizers.push(prop.normalizer);
        }
        let pi: Vec<f64> = sol.nu_weights.iter().zip(&sol.r_values).map(|(a, b)| a * b).collect();
        let total: f64 = pi.iter().sum();
        k.stationary = pi.into_iter().map(|w| w / total).collect();
        if let Some(c) = ens.conformal_scales() {
            let raw: Vec<f64> = k.probs.iter().zip(&c).map(|(p, c)| p * c.powf(k.s)).collect();
            let total: f64 = raw.iter().sum();
            k.uniform = Some(raw.into_iter().map(|w| w / total).collect());
        }
        Ok(k)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn atoms(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn node_weights(&self, j: usize) -> &[f64] {
        let m = self.atoms();
        &self.node_weights[j * m..(j + 1) * m]
    }

    pub fn node_normalizer(&self, j: usize) -> f64 {
        self.node_normalizers[j]
    }

    pub fn stationary_weights(&self) -> &[f64] {
        &self.stationary
    }

    /// Node-independent weights, present for conformal ensembles.
    pub fn uniform_weights(&self) -> Option<&[f64]> {
        self.uniform.as_deref()
    }

    /// Interpolated `r̂_s` at a planar point.
    pub fn r_hat(&self, x: &[f64]) -> f64 {
        self.grid.interpolate(&self.r_values, angle_of(x, self.grid.space()))
    }

    /// Fills `out` with the proposal at the unit vector `x`.
    pub fn proposal_at(&self, x: &[f64], out: &mut Proposal) -> Result<()> {
        let m = self.atoms();
        out.images.resize(m, [0.0; 2]);
        out.log_gains.resize(m, 0.0);
        out.weights.resize(m, 0.0);
        let denom = self.kappa * self.r_hat(x);
        let norm = self.grid.norm;
        let mut total = 0.0;
        for (i, g) in self.matrices.iter().enumerate() {
            let v = [g[0] * x[0] + g[1] * x[1], g[2] * x[0] + g[3] * x[1]];
            let len = norm.norm(&v);
            if !(len > 1e-300) {
                return Err(Error::CollapsedImage(len));
            }
            let img = [v[0] / len, v[1] / len];
            let raw = self.probs[i] * (self.s * len.ln()).exp() * self.r_hat(&img) / denom;
            if !(raw >= 0.0) || !raw.is_finite() {
                return Err(Error::NegativeWeight(raw));
            }
            out.images[i] = img;
            out.log_gains[i] = len.ln();
            out.weights[i] = raw;
            total += raw;
        }
        out.weights.iter_mut().for_each(|w| *w /= total);
        out.normalizer = total;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::presets::*;
    use crate::spectral::solver::{dominant_triple, SolverOptions};

    fn kernel(ens: &Ensemble, s: f64, m: usize) -> TiltedKernel {
        let grid = AngleGrid::for_space(ens.space(), m, ens.norm()).unwrap();
        let sol = dominant_triple(ens, s, &grid, SolverOptions::default()).unwrap();
        tilted_kernel(ens, &sol).unwrap()
    }

    #[test]
    fn s_zero_is_untilted() {
        for ens in [positive_pair(), unipotent_pair()] {
            let k = kernel(&ens, 0.0, 256);
            for j in 0..k.grid().len() {
                for (w, a) in k.node_weights(j).iter().zip(ens.atoms()) {
                    assert!((w - a.prob).abs() < 1e-9);
                }
                assert!((k.node_normalizer(j) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conformal_weights_are_node_independent() {
        let ens = conformal_triple();
        let s = 0.3;
        let k = kernel(&ens, s, 64);
        let raw = [0.6 * 2f64.powf(s), 0.3 * 3f64.powf(s), 0.1 * 5f64.powf(s)];
        let total: f64 = raw.iter().sum();
        let uniform = k.uniform_weights().unwrap();
        for j in 0..k.grid().len() {
            for i in 0..3 {
                assert!((k.node_weights(j)[i] - raw[i] / total).abs() < 1e-12);
                assert!((uniform[i] - raw[i] / total).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let ens = positive_pair();
        let k = kernel(&ens, 0.15, 512);
        for j in 0..k.grid().len() {
            let w = k.node_weights(j);
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            // eigen-equation: normalizers sit near 1 when r̂ is accurate
            assert!((k.node_normalizer(j) - 1.0).abs() < 1e-3);
        }
    }
}
