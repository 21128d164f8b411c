use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{jackknife_mean, SampleSet, TargetFunction, WeightedSampleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Upper,
    Lower,
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn y_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// `F̂_n(y) = (1/R) Σ wₖ φ(Xₖ) 1{(Lₖ − nλ)/(σ√n) ≤ y}` on a grid, with
/// path-level jackknife standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTargetCdf {
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `F̂_n(+∞)`, the estimate of `E[φ(X_n)]`.
    pub total: f64,
}

pub fn target_cdf(set: &SampleSet, phi: &TargetFunction, lambda: f64, sigma: f64, y: &[f64]) -> Result<EmpiricalTargetCdf> {
    build_cdf(set, None, set.len(), phi, lambda, sigma, y)
}

pub fn weighted_target_cdf(
    set: &WeightedSampleSet,
    phi: &TargetFunction,
    lambda: f64,
    sigma: f64,
    y: &[f64],
) -> Result<EmpiricalTargetCdf> {
    build_cdf(&set.samples, Some(&set.weights), set.attempted, phi, lambda, sigma, y)
}

fn build_cdf(
    set: &SampleSet,
    weights: Option<&[f64]>,
    attempted: usize,
    phi: &TargetFunction,
    lambda: f64,
    sigma: f64,
    y: &[f64],
) -> Result<EmpiricalTargetCdf> {
    if !(sigma > 1e-12) {
        return Err(Error::DegenerateVariance(sigma * sigma));
    }
    if y.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("y grid must be nondecreasing"));
    }
    let n = set.n as f64;
    let scale = sigma * n.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..set.len())
        .map(|k| {
            let w = weights.map_or(1.0, |w| w[k]);
            ((set.log_norms[k] - n * lambda) / scale, w * phi.eval(set.endpoint(k)))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut sum = Vec::with_capacity(pairs.len() + 1);
    let mut sum_sq = Vec::with_capacity(pairs.len() + 1);
    let (mut s1, mut s2) = (0.0, 0.0);
    sum.push(0.0);
    sum_sq.push(0.0);
    for &(_, v) in &pairs {
        s1 += v;
        s2 += v * v;
        sum.push(s1);
        sum_sq.push(s2);
    }
    let r = attempted as f64;
    let stats = |k: usize| {
        let mean = sum[k] / r;
        let var = ((sum_sq[k] - r * mean * mean) / (r - 1.0)).max(0.0);
        (mean, (var / r).sqrt())
    };
    let mut values = Vec::with_capacity(y.len());
    let mut stderr = Vec::with_capacity(y.len());
    for &yy in y {
        let k = pairs.partition_point(|p| p.0 <= yy);
        let (m, se) = stats(k);
        values.push(m);
        stderr.push(se);
    }
    Ok(EmpiricalTargetCdf { y: y.to_vec(), values, stderr, total: stats(pairs.len()).0 })
}

/// `p̂ = (1/R) Σ wₖ φ(Xₖ) 1{Lₖ ≥ threshold}` (upper) or `1{Lₖ ≤ threshold}`
/// (lower), with its jackknife standard error.
pub fn tail_estimate(set: &WeightedSampleSet, phi: &TargetFunction, threshold: f64, tail: Tail) -> Result<(f64, f64)> {
    let hit = |l: f64| match tail {
        Tail::Upper => l >= threshold,
        Tail::Lower => l <= threshold,
    };
    weighted_mean(set, phi, hit)
}

/// `(1/R) Σ wₖ φ(Xₖ) 1{lo ≤ Lₖ ≤ hi}` with its standard error.
pub fn interval_estimate(set: &WeightedSampleSet, phi: &TargetFunction, lo: f64, hi: f64) -> Result<(f64, f64)> {
    weighted_mean(set, phi, |l| lo <= l && l <= hi)
}

fn weighted_mean(set: &WeightedSampleSet, phi: &TargetFunction, hit: impl Fn(f64) -> bool) -> Result<(f64, f64)> {
    if set.weights.is_empty() {
        return Err(Error::AllWeightsRejected);
    }
    let s = &set.samples;
    let v: Vec<f64> = (0..s.len())
        .map(|k| if hit(s.log_norms[k]) { set.weights[k] * phi.eval(s.endpoint(k)) } else { 0.0 })
        .collect();
    Ok(jackknife_mean(&v, set.attempted))
}

/// `sup_y |F̂(y) − prediction(y)|` over the empirical grid and its argmax.
pub fn sup_gap(empirical: &EmpiricalTargetCdf, prediction: impl Fn(f64) -> f64) -> (f64, f64) {
    empirical
        .y
        .iter()
        .zip(&empirical.values)
        .map(|(&y, &v)| ((v - prediction(y)).abs(), y))
        .fold((0.0, f64::NAN), |best, c| if c.0 > best.0 || best.1.is_nan() { c } else { best })
}

/// Least-squares slope of `log gap` against `log n`.
pub fn rate_fit(n: &[usize], gaps: &[f64]) -> Result<f64> {
    if n.len() != gaps.len() || n.len() < 2 {
        return Err(Error::invalid("rate fit needs at least two (n, gap) pairs"));
    }
    if gaps.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::invalid("gaps must be positive"));
    }
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}
