//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use randprod::ensembles::Ensemble;
use randprod::spectral::{solve_tilt, CumulantSet, LambdaCurve};

/// Cumulants `κ₁..κ₅` of the two-point law `{a w.p. 1−q, b w.p. q}`.
pub fn two_point_cumulants(a: f64, b: f64, q: f64) -> [f64; 5] {
    let h = b - a;
    let v = q * (1.0 - q);
    [
        a + h * q,
        h.powi(2) * v,
        h.powi(3) * v * (1.0 - 2.0 * q),
        h.powi(4) * v * (1.0 - 6.0 * v),
        h.powi(5) * v * (1.0 - 2.0 * q) * (1.0 - 12.0 * v),
    ]
}

/// `log E|G_n x|^s` for `n = 1..=n_max` by summing over every product.
pub fn enumerated_log_moments(ens: &Ensemble, x: &[f64], s: f64, n_max: usize) -> Vec<f64> {
    let atoms = ens.atoms();
    let norm = ens.norm();
    // (unit vector, log|G x|, path probability)
    let mut level: Vec<([f64; 2], f64, f64)> = vec![([x[0], x[1]], 0.0, 1.0)];
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let mut next = Vec::with_capacity(level.len() * atoms.len());
        for (u, l, w) in &level {
            for a in atoms {
                let g = &a.matrix;
                let v = [g[0] * u[0] + g[1] * u[1], g[2] * u[0] + g[3] * u[1]];
                let r = norm.norm(&v);
                next.push(([v[0] / r, v[1] / r], l + r.ln(), w * a.prob));
            }
        }
        level = next;
        let m: f64 = level.iter().map(|(_, l, w)| w * (s * l).exp()).sum();
        out.push(m.ln());
    }
    out
}

/// `κ(s)` from enumeration: first-order Richardson extrapolation of
/// `(1/n) log E|G_n x|^s` in `1/n` between the two largest depths.
pub fn enumerated_kappa(ens: &Ensemble, x: &[f64], s: f64, n_max: usize) -> f64 {
    let a = enumerated_log_moments(ens, x, s, n_max);
    let n = n_max as f64;
    let (hi, lo) = (a[n_max - 1] / n, a[n_max - 2] / (n - 1.0));
    (n * hi - (n - 1.0) * lo).exp()
}

/// `|sΛ'(s) − Λ(s) − (t²/2 − t³ζ(t))|` with `s` the tilt for `y = t√n`.
pub fn zeta_identity_residual(curve: &LambdaCurve, c: &CumulantSet, t: f64) -> f64 {
    let n = 400u64;
    let y = t * (n as f64).sqrt();
    let s = solve_tilt(curve, y, n, 1.0).expect("tilt inside window");
    let zeta = c.cramer().expect("non-degenerate").eval_unchecked(t);
    (s * curve.derivative(s, 1) - curve.value(s) - (t * t / 2.0 - t.powi(3) * zeta)).abs()
}

/// `|λ_{s,z} − (1 + Λ''(s)z²/2 + Λ'''(s)z³/6)|`.
pub fn taylor_remainder(curve: &LambdaCurve, s: f64, z: f64) -> f64 {
    let lam = randprod::spectral::exponent_identity(curve, s, z).expect("inside window");
    (lam - (1.0 + curve.derivative(s, 2) * z * z / 2.0 + curve.derivative(s, 3) * z.powi(3) / 6.0)).abs()
}

/// Upper tail `P(K ≥ k)` of a binomial law.
pub fn binomial_upper_tail(n: usize, q: f64, k: usize) -> f64 {
    // log-space terms to avoid underflow at moderate n
    let mut log_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        log_fact[i] = log_fact[i - 1] + (i as f64).ln();
    }
    (k..=n)
        .map(|j| (log_fact[n] - log_fact[j] - log_fact[n - j] + j as f64 * q.ln() + (n - j) as f64 * (1.0 - q).ln()).exp())
        .sum()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
