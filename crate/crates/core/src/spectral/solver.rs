use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

use super::grid::AngleGrid;
use super::operator::{assemble, OperatorMatrix};

/// Gap ratios above this are flagged as not separated.
pub const GAP_COLLAPSE: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative width of the Collatz-Wielandt bracket at which the power
    /// iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-13, max_iter: 200_000 }
    }
}

/// Dominant eigen-triple of the discretized `P_s`.
///
/// `r_values` are normalized by `ν₀(r_s) = 1` (ν₀ the stationary weights at
/// `s = 0`), `nu_weights` by `ν_s(1) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSolution {
    pub s: f64,
    pub grid: AngleGrid,
    pub kappa: f64,
    pub r_values: Vec<f64>,
    pub nu_weights: Vec<f64>,
    /// Estimate of `|second eigenvalue| / κ`.
    pub gap: f64,
    /// `‖P r − κ r‖∞ / (κ ‖r‖∞)`.
    pub residual: f64,
    /// `‖ν P − κ ν‖₁ / κ`.
    pub left_residual: f64,
    pub iterations: usize,
    /// `gap > 0.95`: the dominant eigenvalue is not separated, so `r_s` and
    /// `ν_s` are not unique and should not be trusted.
    pub gap_collapsed: bool,
}

impl SpectralSolution {
    pub fn lambda(&self) -> f64 {
        self.kappa.ln()
    }

    /// `r_s` at an arbitrary angle, linearly interpolated.
    pub fn r_at(&self, theta: f64) -> f64 {
        self.grid.interpolate(&self.r_values, theta)
    }

    /// `ν_s(φ)` for node values `φ_j`.
    pub fn nu_integral(&self, phi: &[f64]) -> f64 {
        self.nu_weights.iter().zip(phi).map(|(a, b)| a * b).sum()
    }

    /// Errors with [`Error::GapCollapse`] on a flagged solution.
    pub fn require_gap(&self) -> Result<&Self> {
        if self.gap_collapsed {
            Err(Error::GapCollapse(self.gap))
        } else {
            Ok(self)
        }
    }
}

/// Solves for the eigen-triple at many `s` on a fixed grid, computing the
/// stationary weights `ν₀` once.
#[derive(Debug)]
pub struct SpectralSolver<'a> {
    ensemble: &'a Ensemble,
    grid: AngleGrid,
    options: SolverOptions,
    nu0: OnceLock<Vec<f64>>,
}

impl<'a> SpectralSolver<'a> {
    pub fn new(ensemble: &'a Ensemble, grid: AngleGrid, options: SolverOptions) -> Result<Self> {
        if ensemble.dim() != 2 {
            return Err(Error::UnsupportedDimension(ensemble.dim()));
        }
        if grid.space() != ensemble.space() || grid.norm != ensemble.norm() {
            return Err(Error::invalid("grid space or norm does not match the ensemble"));
        }
        Ok(SpectralSolver { ensemble, grid, options, nu0: OnceLock::new() })
    }

    pub fn ensemble(&self) -> &Ensemble {
        self.ensemble
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    /// Stationary weights of the untilted chain.
    pub fn nu0(&self) -> Result<&[f64]> {
        if let Some(v) = self.nu0.get() {
            return Ok(v);
        }
        let p = assemble(self.ensemble, 0.0, &self.grid)?;
        let (mut r, _, _) = right_eigen(&p, &self.options)?;
        let kappa = rescale_max(&mut r);
        let (nu, _) = left_eigen(&p, kappa, &self.options)?;
        Ok(self.nu0.get_or_init(|| nu))
    }

    pub fn solve(&self, s: f64) -> Result<SpectralSolution> {
        let nu0 = self.nu0()?.to_vec();
        let p = assemble(self.ensemble, s, &self.grid)?;
        let (mut r, kappa, iterations) = right_eigen(&p, &self.options)?;
        let (nu, left_residual) = left_eigen(&p, kappa, &self.options)?;
        let scale: f64 = nu0.iter().zip(&r).map(|(a, b)| a * b).sum();
        r.iter_mut().for_each(|x| *x /= scale);
        let residual = right_residual(&p, &r, kappa);
        let gap = deflated_gap(&p, kappa, &r, &nu);
        Ok(SpectralSolution {
            s,
            grid: self.grid,
            kappa,
            r_values: r,
            nu_weights: nu,
            gap,
            residual,
            left_residual,
            iterations,
            gap_collapsed: gap > GAP_COLLAPSE,
        })
    }

    pub fn solve_many(&self, exec: Execution, s: &[f64]) -> Result<Vec<SpectralSolution>> {
        self.nu0()?;
        map_indexed(exec, s.len(), |i| self.solve(s[i])).into_iter().collect()
    }
}

/// Computes the dominant eigen-triple of the discretized `P_s`.
pub fn dominant_triple(
    ens: &Ensemble,
    s: f64,
    grid: &AngleGrid,
    options: SolverOptions,
) -> Result<SpectralSolution> {
    SpectralSolver::new(ens, *grid, options)?.solve(s)
}

fn rescale_max(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    v.iter_mut().for_each(|x| *x /= m);
    m
}

/// Power iteration from the constant vector. Stops when the Collatz-Wielandt
/// bracket `[min (Pv)ᵢ/vᵢ, max (Pv)ᵢ/vᵢ]` has relative width below `tol`.
fn right_eigen(p: &OperatorMatrix, opts: &SolverOptions) -> Result<(Vec<f64>, f64, usize)> {
    let n = p.size();
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    for it in 1..=opts.max_iter {
        p.apply(&v, &mut w);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in w.iter().zip(&v) {
            let q = a / b;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::invalid("transfer operator lost positivity"));
        }
        let converged = hi - lo <= opts.tol * hi;
        std::mem::swap(&mut v, &mut w);
        let scale = rescale_max(&mut v);
        if converged {
            // v already holds P v_prev / max; κ is the bracket midpoint
            let _ = scale;
            return Ok((v, 0.5 * (lo + hi), it));
        }
    }
    Err(Error::NoConvergence(opts.max_iter))
}

fn left_eigen(p: &OperatorMatrix, kappa: f64, opts: &SolverOptions) -> Result<(Vec<f64>, f64)> {
    let n = p.size();
    let mut mu = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    let mut prev_res = f64::INFINITY;
    for _ in 0..opts.max_iter {
        p.apply_transpose(&mu, &mut w);
        let res: f64 = w.iter().zip(&mu).map(|(a, b)| (a - kappa * b).abs()).sum::<f64>() / kappa;
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        std::mem::swap(&mut mu, &mut w);
        // stop once converged to tolerance, or once the residual has hit its
        // floating-point floor and stopped improving
        if res <= opts.tol || (res <= 1e-10 && res >= prev_res) {
            return Ok((mu, res));
        }
        prev_res = res;
    }
    Err(Error::NoConvergence(opts.max_iter))
}

fn right_residual(p: &OperatorMatrix, r: &[f64], kappa: f64) -> f64 {
    let mut w = vec![0.0; r.len()];
    p.apply(r, &mut w);
    let rmax = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    w.iter()
        .zip(r)
        .map(|(a, b)| (a - kappa * b).abs())
        .fold(0.0, f64::max)
        / (kappa * rmax)
}

/// `|λ₂|/κ` by power iteration on `P − κ r νᵀ/(ν·r)`, averaging the log growth
/// over a window to cope with complex second eigenvalues.
fn deflated_gap(p: &OperatorMatrix, kappa: f64, r: &[f64], nu: &[f64]) -> f64 {
    const WARMUP: usize = 300;
    const WINDOW: usize = 200;
    let n = r.len();
    let nr: f64 = nu.iter().zip(r).map(|(a, b)| a * b).sum();
    let deflate = |v: &mut [f64]| {
        let c: f64 = nu.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() / nr;
        v.iter_mut().zip(r).for_each(|(x, ri)| *x -= c * ri);
    };
    let mut v: Vec<f64> = (0..n).map(|j| ((j as f64 + 0.5) * 2.399_963).sin()).collect();
    deflate(&mut v);
    let mut w = vec![0.0; n];
    let mut log_growth = 0.0;
    for it in 0..WARMUP + WINDOW {
        let before = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if before == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= before);
        p.apply(&v, &mut w);
        deflate(&mut w);
        std::mem::swap(&mut v, &mut w);
        let after = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if after == 0.0 {
            return 0.0;
        }
        if it >= WARMUP {
            log_growth += (after / kappa).ln();
        }
    }
    (log_growth / WINDOW as f64).exp().min(1.0)
}
