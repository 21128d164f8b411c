use serde::{Deserialize, Serialize};

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::geometry::{angle_of, Direction};
use crate::par::Execution;
use crate::spectral::{AngleGrid, SolverOptions, SpectralSolver};

use super::stats::jackknife_mean;
use super::{simulate_with, TargetFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Monte Carlo `b_φ(x) ≈ E[(log|G_n x| − nλ) φ(X_n^x)]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_b_phi(
    exec: Execution,
    ens: &Ensemble,
    phi: &TargetFunction,
    x: &Direction,
    lambda: f64,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<BiasEstimate> {
    let set = simulate_with(exec, ens, x, n, r, seed)?;
    let v: Vec<f64> = (0..set.len())
        .map(|k| (set.log_norms[k] - n as f64 * lambda) * phi.eval(set.endpoint(k)))
        .collect();
    let (value, stderr) = jackknife_mean(&v, v.len());
    Ok(BiasEstimate { value, stderr })
}

/// Spectral `b_φ(x)`: central difference in `h` of
/// `ν_h(φ) r_h(x) / ν_h(r_h)`.
pub fn b_phi_spectral(ens: &Ensemble, phi: &TargetFunction, x: &Direction, grid: &AngleGrid, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("difference step must be positive"));
    }
    let solver = SpectralSolver::new(ens, *grid, SolverOptions::default())?;
    let phi_nodes = phi.on_grid(grid);
    let theta = angle_of(x.coords(), ens.space());
    let projector = |s: f64| -> Result<f64> {
        let sol = solver.solve(s)?;
        Ok(sol.nu_integral(&phi_nodes) * sol.r_at(theta) / sol.nu_integral(&sol.r_values))
    };
    Ok((projector(h)? - projector(-h)?) / (2.0 * h))
}
