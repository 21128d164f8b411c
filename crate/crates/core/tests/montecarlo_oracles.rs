mod common;

use rand::Rng;
use randprod::ensembles::presets;
use randprod::limits::{tail_estimate, Model, Tail};
use randprod::montecarlo::{
    b_phi_spectral, estimate_b_phi, sample_cumulants, simulate_with, tilted_simulate_with, TargetFunction,
};
use randprod::par::Execution;
use randprod::spectral::{tilted_kernel, AngleGrid, SolverOptions, SpectralSolver, TiltedKernel};
use randprod::{Direction, Ensemble};

const EXEC: Execution = Execution::Parallel;

fn start(ens: &Ensemble) -> Direction {
    Direction::project(&[1.0, 1.0], ens.space(), ens.norm()).unwrap()
}

fn kernel(ens: &Ensemble, m: usize, s: f64) -> TiltedKernel {
    let grid = AngleGrid::for_space(ens.space(), m, ens.norm()).unwrap();
    let sol = SpectralSolver::new(ens, grid, SolverOptions::default()).unwrap().solve(s).unwrap();
    tilted_kernel(ens, &sol).unwrap()
}

fn close(a: f64, b: f64, se: f64, floor: f64) -> bool {
    (a - b).abs() <= (3.0 * se).max(floor)
}

/// Both sides of the change of measure at n = 3, summed over all 3-step
/// paths of a conformal law, for an indicator of a log-norm bin.
#[test]
fn change_of_measure_holds_exactly_at_three_steps() {
    let mut rng = common::rng(3);
    for case in 0..1000 {
        let atoms = rng.gen_range(2..=4);
        let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let scales: Vec<(f64, f64)> = raw.iter().map(|p| (rng.gen_range(0.3..5.0), p / total)).collect();
        let ens = presets::conformal(&scales);
        let s = rng.gen_range(-1.0..1.0);
        let k = kernel(&ens, 64, s);
        let node = rng.gen_range(0..k.grid().len());
        let w = k.node_weights(node);
        let kappa: f64 = scales.iter().map(|(c, p)| p * c.powf(s)).sum();
        let (lo, hi) = {
            let a = rng.gen_range(-3.0..5.0);
            (a, a + rng.gen_range(0.1..3.0))
        };
        let h = |l: f64| if lo <= l && l < hi { 1.0 } else { 0.0 };
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for i in 0..atoms {
            for j in 0..atoms {
                for l in 0..atoms {
                    let path = [i, j, l];
                    let log: f64 = path.iter().map(|&a| scales[a].0.ln()).sum();
                    let p: f64 = path.iter().map(|&a| scales[a].1).product();
                    lhs += p * (s * log).exp() / kappa.powi(3) * h(log);
                    rhs += path.iter().map(|&a| w[a]).product::<f64>() * h(log);
                }
            }
        }
        assert!((lhs - rhs).abs() <= 1e-10, "case {case}: {lhs} vs {rhs}");
    }
}

#[test]
fn importance_weights_have_unit_mean() {
    let ens = presets::positive_pair();
    let set = tilted_simulate_with(EXEC, &ens, &kernel(&ens, 256, 0.1), Some(&start(&ens)), 20, 100_000, 4).unwrap();
    let (mean, se) = tail_estimate(&set, &TargetFunction::ConstantOne, f64::NEG_INFINITY, Tail::Upper).unwrap();
    assert!(close(mean, 1.0, se, 0.0), "{mean} +- {se}");
}

#[test]
fn tilted_paths_follow_the_tilted_drift() {
    let ens = presets::positive_pair();
    let model = Model::build(ens.clone(), 256, 0.2, EXEC).unwrap();
    let s = 0.1;
    let n = 2000;
    let set = tilted_simulate_with(EXEC, &ens, &kernel(&ens, 256, s), Some(&start(&ens)), n, 10_000, 5).unwrap();
    let rates: Vec<f64> = set.samples.log_norms.iter().map(|l| l / n as f64).collect();
    let (mean, se) = randprod::montecarlo::jackknife_mean(&rates, rates.len());
    let drift = model.curve.derivative(s, 1);
    assert!((mean - drift).abs() <= 3.0 * se + 2.0 / n as f64, "{mean} vs {drift}");
}

#[test]
fn sample_moments_match_two_point_cumulants() {
    let exact_half = common::two_point_cumulants(2f64.ln(), 3f64.ln(), 0.5);
    let ens = presets::conformal_pair(0.5);
    let set = simulate_with(EXEC, &ens, &start(&ens), 64, 200_000, 6).unwrap();
    let m = sample_cumulants(&set, exact_half[0]).unwrap();
    assert!(close(m.m[1], exact_half[1], m.stderr[1], 0.0), "{:?}", m);

    let exact = common::two_point_cumulants(2f64.ln(), 3f64.ln(), 0.2);
    let ens = presets::conformal_pair(0.8);
    let set = simulate_with(EXEC, &ens, &start(&ens), 20, 200_000, 7).unwrap();
    let m = sample_cumulants(&set, exact[0]).unwrap();
    assert!(close(m.m[2], exact[2], m.stderr[2], 0.0), "{:?}", m);
}

#[test]
fn positive_pair_variance_matches_the_spectrum() {
    let ens = presets::positive_pair();
    let model = Model::build(ens.clone(), 256, 0.2, EXEC).unwrap();
    let n = 400;
    let set = simulate_with(EXEC, &ens, &start(&ens), n, 50_000, 8).unwrap();
    let m = sample_cumulants(&set, model.cumulants.lambda).unwrap();
    assert!(close(m.m[1], model.cumulants.sigma2, m.stderr[1], 20.0 / n as f64 * model.cumulants.sigma2), "{:?}", m);
}

#[test]
fn plain_and_tilted_tails_agree() {
    let ens = presets::positive_pair();
    let model = Model::build(ens.clone(), 256, 0.2, EXEC).unwrap();
    let n = 100;
    let threshold = n as f64 * model.cumulants.lambda + 1.5 * model.cumulants.sigma() * (n as f64).sqrt();
    let one = TargetFunction::ConstantOne;
    let plain = tilted_simulate_with(EXEC, &ens, &kernel(&ens, 256, 0.0), Some(&start(&ens)), n, 100_000, 9).unwrap();
    let tilted = tilted_simulate_with(EXEC, &ens, &kernel(&ens, 256, 0.15), Some(&start(&ens)), n, 100_000, 10).unwrap();
    let (a, sa) = tail_estimate(&plain, &one, threshold, Tail::Upper).unwrap();
    let (b, sb) = tail_estimate(&tilted, &one, threshold, Tail::Upper).unwrap();
    assert!(sb < sa);
    assert!(close(a, b, (sa * sa + sb * sb).sqrt(), 0.0), "{a} +- {sa} vs {b} +- {sb}");
}

#[test]
fn tilted_tail_matches_binomial_enumeration() {
    let ens = presets::conformal_pair(0.5);
    let n = 20;
    let threshold = 14.0 * 3f64.ln() + 6.0 * 2f64.ln() - 1e-9;
    let set = tilted_simulate_with(EXEC, &ens, &kernel(&ens, 64, 1.0), Some(&start(&ens)), n, 100_000, 11).unwrap();
    let (p, se) = tail_estimate(&set, &TargetFunction::ConstantOne, threshold, Tail::Upper).unwrap();
    let exact = common::binomial_upper_tail(n, 0.5, 14);
    assert!(close(p, exact, se, 0.0), "{p} +- {se} vs {exact}");
    assert!(se / p < 0.02);
}

#[test]
fn mean_log_norm_matches_enumeration() {
    let ens = presets::positive_pair();
    let x = start(&ens);
    let mut exact = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut v = x.coords().to_vec();
                for a in [i, j, k] {
                    let g = &ens.atoms()[a].matrix;
                    v = vec![g[0] * v[0] + g[1] * v[1], g[2] * v[0] + g[3] * v[1]];
                }
                exact += 0.125 * ens.norm().norm(&v).ln();
            }
        }
    }
    let set = simulate_with(EXEC, &ens, &x, 3, 100_000, 12).unwrap();
    let (mean, se) = randprod::montecarlo::jackknife_mean(&set.log_norms, set.len());
    assert!(close(mean, exact, se, 0.0), "{mean} +- {se} vs {exact}");
}

#[test]
fn bias_term_monte_carlo_matches_spectral() {
    let ens = presets::positive_pair();
    let model = Model::build(ens.clone(), 512, 0.2, EXEC).unwrap();
    let x = start(&ens);
    let phi = TargetFunction::FirstCoordinate;
    let spectral = b_phi_spectral(&ens, &phi, &x, &model.grid, 1e-3).unwrap();
    let mc = estimate_b_phi(EXEC, &ens, &phi, &x, model.cumulants.lambda, 30, 400_000, 13).unwrap();
    assert!(close(mc.value, spectral, mc.stderr, 1e-3), "{mc:?} vs {spectral}");
}
