use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::par::Execution;

use super::grid::AngleGrid;
use super::solver::{SolverOptions, SpectralSolver};

pub const FIT_DEGREE: usize = 8;
pub const DEFAULT_NODES: usize = 17;
pub const DEFAULT_WINDOW: f64 = 0.2;
/// Number of terms kept in the Cramér series.
pub const CRAMER_TERMS: usize = 3;

/// `n` Chebyshev points of the first kind on `[-window, window]`, ascending.
pub fn chebyshev_nodes(n: usize, window: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            let c = ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos();
            if c.abs() < 1e-15 {
                0.0
            } else {
                window * c
            }
        })
        .collect();
    v.reverse();
    v
}

/// Sampled `Λ(s) = log κ(s)` with a global least-squares polynomial fit used
/// for derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    window: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    /// Gap ratio at each node (0 when unknown).
    gaps: Vec<f64>,
    /// Monomial coefficients in `u = s / window`.
    coeffs: Vec<f64>,
    fit_residual: f64,
}

impl LambdaCurve {
    /// Builds the curve from values sampled inside `[-window, window]`.
    pub fn from_values(window: f64, nodes: Vec<f64>, values: Vec<f64>, gaps: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() != gaps.len() {
            return Err(Error::invalid("nodes, values and gaps differ in length"));
        }
        if nodes.len() <= FIT_DEGREE {
            return Err(Error::invalid(format!("need more than {FIT_DEGREE} nodes for the fit")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value of Lambda"));
        }
        if !(window > 0.0) || nodes.iter().any(|s| s.abs() > window) {
            return Err(Error::invalid("nodes must lie in a window of positive width"));
        }
        let coeffs = fit_monomial(&nodes, &values, window)?;
        let fit_residual = nodes
            .iter()
            .zip(&values)
            .map(|(&s, &v)| (horner(&coeffs, s / window) - v).abs())
            .fold(0.0, f64::max);
        Ok(LambdaCurve { window, nodes, values, gaps, coeffs, fit_residual })
    }

    /// Samples a closed-form `Λ` on the default Chebyshev nodes.
    pub fn from_fn(window: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes = chebyshev_nodes(DEFAULT_NODES, window);
        let values = nodes.iter().map(|&s| f(s)).collect();
        LambdaCurve::from_values(window, nodes, values, vec![0.0; DEFAULT_NODES])
    }

    /// Solves the eigenproblem at each node, concurrently over nodes.
    pub fn from_solver(solver: &SpectralSolver<'_>, window: f64, nodes: &[f64], exec: Execution) -> Result<Self> {
        let sols = solver.solve_many(exec, nodes)?;
        let values = sols.iter().map(|s| s.lambda()).collect();
        let gaps = sols.iter().map(|s| s.gap).collect();
        LambdaCurve::from_values(window, nodes.to_vec(), values, gaps)
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    pub fn contains(&self, s: f64) -> bool {
        s.abs() <= self.window * (1.0 + 1e-12)
    }

    /// `k`-th derivative of the fitted `Λ` at `s`.
    pub fn derivative(&self, s: f64, k: usize) -> f64 {
        let u = s / self.window;
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            c = (1..c.len()).map(|i| i as f64 * c[i]).collect();
            if c.is_empty() {
                return 0.0;
            }
        }
        horner(&c, u) / self.window.powi(k as i32)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }

    /// Smallest second divided difference of the sampled values.
    pub fn min_second_difference(&self) -> f64 {
        let (s, v) = (&self.nodes, &self.values);
        (1..s.len() - 1)
            .map(|i| {
                let left = (v[i] - v[i - 1]) / (s[i] - s[i - 1]);
                let right = (v[i + 1] - v[i]) / (s[i + 1] - s[i]);
                2.0 * (right - left) / (s[i + 1] - s[i - 1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `γ_k = Λ^{(k)}(0)` for `k = 1..=5`.
    pub fn cumulants(&self) -> Result<CumulantSet> {
        if self.nodes.len() < DEFAULT_NODES {
            return Err(Error::invalid(format!("cumulants need at least {DEFAULT_NODES} nodes")));
        }
        let scale = self.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if self.fit_residual > 1e-6 * (1.0 + scale) {
            return Err(Error::IllConditionedFit(self.fit_residual));
        }
        let mut gamma = [0.0; 5];
        for (k, g) in gamma.iter_mut().enumerate() {
            *g = self.derivative(0.0, k + 1);
        }
        Ok(CumulantSet {
            gamma,
            lambda: gamma[0],
            sigma2: gamma[1],
            window: self.window,
            fit_residual: self.fit_residual,
            worst_gap: self.gaps.iter().cloned().fold(0.0, f64::max),
        })
    }
}

/// `Λ(s)` sampled on the given nodes for an ensemble; the window is the
/// largest `|s|`.
pub fn lambda_curve(ens: &Ensemble, s_nodes: &[f64], grid: &AngleGrid) -> Result<LambdaCurve> {
    let solver = SpectralSolver::new(ens, *grid, SolverOptions::default())?;
    let window = s_nodes.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    LambdaCurve::from_solver(&solver, window, s_nodes, Execution::default())
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

fn fit_monomial(nodes: &[f64], values: &[f64], window: f64) -> Result<Vec<f64>> {
    let n = nodes.len();
    let deg = FIT_DEGREE;
    let a = DMatrix::from_fn(n, deg + 1, |i, j| (nodes[i] / window).powi(j as i32));
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))?;
    Ok(x.iter().cloned().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    /// `γ₁ ..= γ₅`.
    pub gamma: [f64; 5],
    /// Lyapunov exponent, `γ₁`.
    pub lambda: f64,
    /// Asymptotic variance, `γ₂`.
    pub sigma2: f64,
    /// Half-width of the symmetric window `[-window, window]`.
    pub window: f64,
    pub fit_residual: f64,
    /// Largest gap ratio over the nodes (closest to collapse).
    pub worst_gap: f64,
}

impl CumulantSet {
    /// Cumulants given directly, with no fit behind them.
    pub fn from_gammas(gamma: [f64; 5], window: f64) -> Self {
        CumulantSet { gamma, lambda: gamma[0], sigma2: gamma[1], window, fit_residual: 0.0, worst_gap: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.max(0.0).sqrt()
    }

    pub fn cramer(&self) -> Result<CramerSeries> {
        CramerSeries::new(self)
    }
}

/// The Cramér series truncated after three terms, `ζ(t) = c₀ + c₁t + c₂t²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerSeries {
    pub coeffs: [f64; CRAMER_TERMS],
    /// Largest admissible `|t|`.
    pub radius: f64,
}

impl CramerSeries {
    pub fn new(c: &CumulantSet) -> Result<Self> {
        let [_, g2, g3, g4, g5] = c.gamma;
        if g2 <= 1e-12 {
            return Err(Error::DegenerateVariance(g2));
        }
        let coeffs = [
            g3 / (6.0 * g2.powf(1.5)),
            (g4 * g2 - 3.0 * g3 * g3) / (24.0 * g2.powi(3)),
            (g5 * g2 * g2 - 10.0 * g4 * g3 * g2 + 15.0 * g3.powi(3)) / (120.0 * g2.powf(4.5)),
        ];
        Ok(CramerSeries { coeffs, radius: c.window })
    }

    pub fn terms(&self) -> usize {
        CRAMER_TERMS
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.abs() > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideWindow { value: t, window: self.radius });
        }
        Ok(self.eval_unchecked(t))
    }

    pub fn eval_unchecked(&self, t: f64) -> f64 {
        let [a, b, c] = self.coeffs;
        a + t * (b + t * c)
    }
}

/// `ζ(t)` from a cumulant set.
pub fn zeta(c: &CumulantSet, t: f64) -> Result<f64> {
    CramerSeries::new(c)?.eval(t)
}

/// Root `s` of `√n [Λ'(s) − Λ'(0)] = sign·σ₀·y`, by bisection on the
/// increasing `Λ'`.
pub fn solve_tilt(curve: &LambdaCurve, y: f64, n: u64, sign: f64) -> Result<f64> {
    if !(y >= 0.0) || n == 0 || sign.abs() != 1.0 {
        return Err(Error::invalid("solve_tilt needs y >= 0, n >= 1 and sign = +-1"));
    }
    let sigma2 = curve.derivative(0.0, 2);
    if sigma2 <= 1e-12 {
        return Err(Error::DegenerateVariance(sigma2));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let d0 = curve.derivative(0.0, 1);
    let target = sign * sigma2.sqrt() * y / (n as f64).sqrt();
    let f = |s: f64| curve.derivative(s, 1) - d0 - target;
    let w = curve.window();
    let (mut lo, mut hi) = if sign > 0.0 { (0.0, w) } else { (-w, 0.0) };
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::RootOutsideWindow { window: w });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `λ_{s,z} = exp(Λ(s+z) − Λ(s) − Λ'(s) z)`.
pub fn exponent_identity(curve: &LambdaCurve, s: f64, z: f64) -> Result<f64> {
    for v in [s, s + z] {
        if !curve.contains(v) {
            return Err(Error::OutsideWindow { value: v, window: curve.window() });
        }
    }
    Ok((curve.value(s + z) - curve.value(s) - curve.derivative(s, 1) * z).exp())
}
