mod common;

use randprod::ensembles::presets;
use randprod::limits::Model;
use randprod::par::Execution;
use randprod::spectral::{AngleGrid, SolverOptions, SpectralSolver};

fn kappa(ens: &randprod::Ensemble, m: usize, s: f64) -> f64 {
    let grid = AngleGrid::for_space(ens.space(), m, ens.norm()).unwrap();
    SpectralSolver::new(ens, grid, SolverOptions::default()).unwrap().solve(s).unwrap().kappa
}

#[test]
fn positive_pair_kappa_matches_enumeration() {
    let ens = presets::positive_pair();
    let x = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
    for s in [-0.1, 0.0, 0.1] {
        let exact = common::enumerated_kappa(&ens, &x, s, 18);
        let k = kappa(&ens, 1024, s);
        assert!((k - exact).abs() <= 1e-3, "s = {s}: {k} vs {exact}");
    }
    assert!((kappa(&ens, 1024, 0.0) - 1.0).abs() <= 1e-10);
}

#[test]
fn kappa_converges_in_the_grid() {
    let ens = presets::positive_pair();
    for s in [-0.2, 0.1] {
        let coarse = kappa(&ens, 512, s);
        let fine = kappa(&ens, 1024, s);
        assert!((coarse - fine).abs() <= 1e-6, "s = {s}: {coarse} vs {fine}");
    }
}

#[test]
fn two_point_cumulants_are_recovered() {
    for p in [0.5, 0.8] {
        let model = Model::build(presets::conformal_pair(p), 64, 0.2, Execution::Sequential).unwrap();
        let exact = common::two_point_cumulants(2f64.ln(), 3f64.ln(), 1.0 - p);
        let tol = [1e-6, 1e-6, 1e-6, 1e-4, 1e-4];
        for k in 0..5 {
            let got = model.cumulants.gamma[k];
            assert!((got - exact[k]).abs() <= tol[k], "p = {p}, gamma{}: {got} vs {}", k + 1, exact[k]);
        }
    }
}

#[test]
fn lambda_is_convex() {
    for ens in [presets::positive_pair(), presets::unipotent_pair(), presets::conformal_triple()] {
        let model = Model::build(ens, 128, 0.2, Execution::Sequential).unwrap();
        assert!(model.curve.min_second_difference() >= -1e-9);
        assert!(model.cumulants.sigma2 > 0.0);
    }
}

#[test]
fn cramer_identity_residual_is_sixth_order() {
    let model = Model::build(presets::conformal_pair(0.8), 64, 0.6, Execution::Sequential).unwrap();
    let target = 2f64.powi(-6);
    for t in [0.04, 0.08] {
        let ratio = common::zeta_identity_residual(&model.curve, &model.cumulants, t / 2.0)
            / common::zeta_identity_residual(&model.curve, &model.cumulants, t);
        assert!(ratio >= target / 4.0 && ratio <= target * 4.0, "t = {t}: ratio {ratio}");
    }
}

#[test]
fn exponent_identity_remainder_is_quartic() {
    let model = Model::build(presets::conformal_pair(0.8), 64, 0.2, Execution::Sequential).unwrap();
    let target = 2f64.powi(-4);
    for z in [0.02, 0.04, -0.02, -0.04] {
        let ratio = common::taylor_remainder(&model.curve, 0.1, z / 2.0) / common::taylor_remainder(&model.curve, 0.1, z);
        assert!(ratio >= target / 4.0 && ratio <= target * 4.0, "z = {z}: ratio {ratio}");
    }
}
