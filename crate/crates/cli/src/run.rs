use std::fs;
use std::path::Path;

use randprod::ensembles::{check_conditions, matrix_gauges};
use randprod::io;
use randprod::limits::{
    md_prediction, verify_be, verify_edgeworth, verify_llt, verify_md, y_grid, LltSettings, MdSettings, Model, Tail,
    VerificationReport,
};
use randprod::montecarlo::{sample_cumulants, simulate_with, TargetFunction};
use randprod::smoothing::SmoothingKernel;
use randprod::spectral::{chebyshev_nodes, solve_tilt, SolverOptions, SpectralSolver};
use randprod::{Direction, Ensemble, Error, Execution};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::{Command, Format, VerifyKind};

pub fn execution(threads: Option<usize>) -> Result<Execution, CliError> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

/// Everything one subcommand produces.
struct Output {
    stem: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    json: String,
    extra: Vec<(String, Vec<u8>)>,
    passed: bool,
    ensemble_hash: Option<String>,
}

impl Output {
    fn new(stem: &str, header: Vec<&'static str>, rows: Vec<Vec<String>>, json: String) -> Self {
        Output { stem: stem.into(), header, rows, json, extra: Vec::new(), passed: true, ensemble_hash: None }
    }
}

#[derive(Serialize)]
struct ArtifactEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    cli_version: &'static str,
    core_version: &'static str,
    command: String,
    config_sha256: String,
    seed: u64,
    ensemble_hash: Option<String>,
    config: &'a ExperimentConfig,
    artifacts: Vec<ArtifactEntry>,
}

/// Runs a subcommand; `Ok(false)` means it ran but a criterion failed.
pub fn run(command: &Command, cfg: &ExperimentConfig, exec: Execution, format: Format) -> Result<bool, CliError> {
    let (name, out) = match command {
        Command::Simulate => ("simulate".to_string(), simulate(cfg, exec)?),
        Command::Spectrum => ("spectrum".into(), spectrum(cfg, exec)?),
        Command::Cumulants => ("cumulants".into(), cumulants(cfg, exec)?),
        Command::Tilt => ("tilt".into(), tilt(cfg, exec)?),
        Command::Verify { theorem } => (format!("verify {}", verify_tag(*theorem)), verify(*theorem, cfg, exec)?),
        Command::Smoothing => ("smoothing".into(), smoothing(cfg)?),
        Command::Conditions => ("conditions".into(), conditions(cfg)?),
    };
    let mut table = Vec::new();
    io::write_table(&mut table, &out.header, &out.rows)?;
    let mut files = vec![(format!("{}.csv", out.stem), table.clone()), (format!("{}.json", out.stem), out.json.clone().into_bytes())];
    files.extend(out.extra.iter().cloned());
    write_artifacts(&cfg.out, &name, cfg, out.ensemble_hash.clone(), &files)?;
    match format {
        Format::Csv => print!("{}", String::from_utf8_lossy(&table)),
        Format::Json => print!("{}", out.json),
    }
    Ok(out.passed)
}

fn write_artifacts(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    ensemble_hash: Option<String>,
    files: &[(String, Vec<u8>)],
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        artifacts.push(ArtifactEntry { path: name.clone(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() });
    }
    let manifest = Manifest {
        tool: "randprod",
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: randprod::VERSION,
        command: command.into(),
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        ensemble_hash,
        config: cfg,
        artifacts,
    };
    fs::write(dir.join("manifest.json"), io::plain_json(&manifest)?)?;
    Ok(())
}

fn verify_tag(kind: VerifyKind) -> &'static str {
    match kind {
        VerifyKind::Be => "be",
        VerifyKind::Edgeworth => "edgeworth",
        VerifyKind::Md => "md",
        VerifyKind::Llt => "llt",
    }
}

fn start(cfg: &ExperimentConfig, ens: &Ensemble) -> Result<Direction, CliError> {
    if cfg.start.len() != ens.dim() {
        return Err(CliError::Config(format!("start has {} entries, ensemble dimension is {}", cfg.start.len(), ens.dim())));
    }
    Ok(Direction::project(&cfg.start, ens.space(), ens.norm())?)
}

fn cell_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn f(v: f64) -> String {
    v.to_string()
}

fn simulate(cfg: &ExperimentConfig, exec: Execution) -> Result<Output, CliError> {
    let ens = cfg.ensemble.build()?;
    let hash = ens.content_hash();
    let x0 = start(cfg, &ens)?;
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    let mut summary = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let set = simulate_with(exec, &ens, &x0, n, cfg.paths, cell_seed(cfg.seed, k))?;
        let mean = set.log_norms.iter().sum::<f64>() / set.len() as f64;
        let moments = sample_cumulants(&set, mean / n as f64).ok();
        let m = |i: usize| moments.map(|c| f(c.m[i])).unwrap_or_default();
        rows.push(vec![n.to_string(), set.len().to_string(), f(mean / n as f64), m(1), m(2)]);
        let mut csv = Vec::new();
        io::write_samples_csv(&mut csv, &set)?;
        let car = io::sidecar(&set, &hash);
        extra.push((format!("samples-n{n}.csv"), csv));
        extra.push((format!("samples-n{n}.json"), io::plain_json(&car)?.into_bytes()));
        summary.push(serde_json::json!({
            "n": n, "paths": set.len(), "seed": set.seed, "mean_log_norm_per_step": mean / n as f64,
            "variance_per_step": moments.map(|c| c.m[1]), "third_moment_per_step": moments.map(|c| c.m[2]),
        }));
    }
    let json = io::plain_json(&serde_json::json!({ "ensemble_hash": hash, "runs": summary }))?;
    let mut out = Output::new("simulate", vec!["n", "paths", "mean_log_norm_per_step", "variance_per_step", "third_moment_per_step"], rows, json);
    out.extra = extra;
    out.ensemble_hash = Some(hash);
    Ok(out)
}

fn spectrum(cfg: &ExperimentConfig, exec: Execution) -> Result<Output, CliError> {
    let ens = cfg.ensemble.build()?;
    let grid = randprod::spectral::AngleGrid::for_space(ens.space(), cfg.grid, ens.norm())?;
    let solver = SpectralSolver::new(&ens, grid, SolverOptions::default())?;
    let sols = solver.solve_many(exec, &chebyshev_nodes(cfg.s_nodes, cfg.window))?;
    let rows = sols
        .iter()
        .map(|s| {
            vec![
                f(s.s),
                f(s.kappa),
                f(s.lambda()),
                f(s.gap),
                s.gap_collapsed.to_string(),
                f(s.residual),
                f(s.left_residual),
                s.iterations.to_string(),
            ]
        })
        .collect();
    let header = vec!["s", "kappa", "lambda", "gap", "gap_collapsed", "residual", "left_residual", "iterations"];
    let mut out = Output::new("spectrum", header, rows, io::to_json(&sols)?);
    out.ensemble_hash = Some(ens.content_hash());
    Ok(out)
}

fn model(cfg: &ExperimentConfig, exec: Execution) -> Result<Model, CliError> {
    Ok(Model::build_with_nodes(cfg.ensemble.build()?, cfg.grid, cfg.window, cfg.s_nodes, exec)?)
}

fn cumulants(cfg: &ExperimentConfig, exec: Execution) -> Result<Output, CliError> {
    let m = model(cfg, exec)?;
    let c = &m.cumulants;
    let mut rows: Vec<Vec<String>> = (0..5).map(|k| vec![format!("gamma{}", k + 1), f(c.gamma[k])]).collect();
    rows.push(vec!["sigma2".into(), f(c.sigma2)]);
    rows.push(vec!["fit_residual".into(), f(c.fit_residual)]);
    rows.push(vec!["worst_gap".into(), f(c.worst_gap)]);
    if let Ok(z) = c.cramer() {
        for (k, v) in z.coeffs.iter().enumerate() {
            rows.push(vec![format!("cramer{k}"), f(*v)]);
        }
        rows.push(vec!["cramer_radius".into(), f(z.radius)]);
    }
    let curve_rows: Vec<Vec<String>> = m
        .curve
        .nodes()
        .iter()
        .zip(m.curve.values())
        .zip(m.curve.gaps())
        .map(|((s, v), g)| vec![f(*s), f(*v), f(*g)])
        .collect();
    let mut curve = Vec::new();
    io::write_table(&mut curve, &["s", "lambda", "gap"], &curve_rows)?;
    let mut out = Output::new("cumulants", vec!["quantity", "value"], rows, io::to_json(c)?);
    out.extra.push(("lambda-curve.csv".into(), curve));
    out.ensemble_hash = Some(m.ensemble.content_hash());
    Ok(out)
}

fn tail_name(t: Tail) -> &'static str {
    match t {
        Tail::Upper => "upper",
        Tail::Lower => "lower",
    }
}

fn tilt(cfg: &ExperimentConfig, exec: Execution) -> Result<Output, CliError> {
    let m = model(cfg, exec)?;
    let zeta = m.cumulants.cramer()?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &n in &cfg.n {
        for &tail in &cfg.tails {
            for &y in &cfg.y {
                let sign = if tail == Tail::Upper { 1.0 } else { -1.0 };
                let (s, status) = match solve_tilt(&m.curve, y, n as u64, sign) {
                    Ok(s) => (Some(s), "ok"),
                    Err(Error::RootOutsideWindow { .. }) => (None, "outside-window"),
                    Err(e) => return Err(e.into()),
                };
                let slope = s.map(|s| m.curve.derivative(s, 1));
                let pred = md_prediction(y, n, &zeta, tail).ok();
                let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
                rows.push(vec![n.to_string(), f(y), tail_name(tail).into(), opt(s), opt(slope), opt(pred), status.into()]);
                cells.push(serde_json::json!({
                    "n": n, "y": y, "tail": tail, "s": s, "slope": slope, "md_prediction": pred, "status": status,
                }));
            }
        }
    }
    let json = io::plain_json(&serde_json::json!({ "window": cfg.window, "cells": cells }))?;
    let header = vec!["n", "y", "tail", "s", "slope", "md_prediction", "status"];
    let mut out = Output::new("tilt", header, rows, json);
    out.ensemble_hash = Some(m.ensemble.content_hash());
    Ok(out)
}

fn verify(kind: VerifyKind, cfg: &ExperimentConfig, exec: Execution) -> Result<Output, CliError> {
    let m = model(cfg, exec)?;
    let x0 = start(cfg, &m.ensemble)?;
    let phi = TargetFunction::by_name(&cfg.target, Some((&m.grid, &m.nu0)))?;
    let mut reports: Vec<VerificationReport> = Vec::new();
    match kind {
        VerifyKind::Be => reports.push(verify_be(&m, &phi, &x0, &cfg.n, cfg.paths, cfg.seed, cfg.be_ratio, exec)?),
        VerifyKind::Edgeworth => {
            for (k, &n) in cfg.n.iter().enumerate() {
                let seed = cell_seed(cfg.seed, k);
                reports.push(verify_edgeworth(&m, &phi, &x0, n, cfg.paths, seed, cfg.edgeworth_ratio, exec)?);
            }
        }
        VerifyKind::Md => {
            for (k, &n) in cfg.n.iter().enumerate() {
                let settings = MdSettings { n, paths: cfg.paths, y: cfg.y.clone(), tails: cfg.tails.clone(), tolerance: cfg.tolerance };
                reports.push(verify_md(&m, &settings, &x0, cell_seed(cfg.seed, k), exec)?);
            }
        }
        VerifyKind::Llt => {
            for (k, &n) in cfg.n.iter().enumerate() {
                let [a1, a2] = cfg.interval;
                let settings = LltSettings { n, paths: cfg.paths, y: cfg.y.clone(), a1, a2, tolerance: cfg.tolerance };
                reports.push(verify_llt(&m, &settings, &x0, cell_seed(cfg.seed, k), exec)?);
            }
        }
    }
    let mut rows = Vec::new();
    for rep in &reports {
        for c in &rep.criteria {
            eprintln!("{} {} observed={:.4} threshold={:.4} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.observed, c.threshold, c.detail);
        }
        for w in &rep.warnings {
            eprintln!("WARN {w}");
        }
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        rows.extend(rep.rows.iter().map(|r| vec![r.n.to_string(), opt(r.y), r.statistic.clone(), f(r.value), opt(r.stderr)]));
    }
    let passed = reports.iter().all(|r| r.passed());
    let stem = format!("verify-{}", verify_tag(kind));
    let mut out = Output::new(&stem, vec!["n", "y", "statistic", "value", "stderr"], rows, io::plain_json(&reports)?);
    out.passed = passed;
    out.ensemble_hash = Some(m.ensemble.content_hash());
    Ok(out)
}

fn smoothing(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let k = SmoothingKernel::new();
    let t = y_grid(-3.0, 3.0, 61);
    let rows = t.iter().map(|&t| vec![f(t), f(k.rho_hat(t))]).collect();
    let y = y_grid(-cfg.smoothing_y_max, cfg.smoothing_y_max, cfg.smoothing_points);
    let rho_rows: Vec<Vec<String>> = y.iter().map(|&y| vec![f(y), f(k.rho(y))]).collect();
    let mut rho = Vec::new();
    io::write_table(&mut rho, &["y", "rho"], &rho_rows)?;
    let json = io::plain_json(&serde_json::json!({
        "b": k.b(),
        "bump_norm": k.norm(),
        "rho_at_zero": k.rho(0.0),
        "mass_in_b": k.mass(-k.b(), k.b()),
        "total_mass": k.total_mass(),
    }))?;
    let mut out = Output::new("smoothing", vec!["t", "rho_hat"], rows, json);
    out.extra.push(("smoothing-rho.csv".into(), rho));
    Ok(out)
}

fn conditions(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let ens = cfg.ensemble.build()?;
    let report = check_conditions(&ens, cfg.condition_depth, cfg.condition_trials, cfg.seed)?;
    let value = serde_json::to_value(&report)?;
    let mut rows: Vec<Vec<String>> = value
        .as_object()
        .expect("report is an object")
        .iter()
        .map(|(k, v)| vec![k.clone(), v.to_string().trim_matches('"').to_string()])
        .collect();
    let mut gauges = Vec::new();
    for (i, atom) in ens.atoms().iter().enumerate() {
        let g = matrix_gauges(&atom.matrix, ens.class(), ens.norm())?;
        rows.push(vec![format!("atom{i}_norm"), f(g.norm_g)]);
        rows.push(vec![format!("atom{i}_iota"), f(g.iota)]);
        rows.push(vec![format!("atom{i}_big_n"), f(g.big_n)]);
        gauges.push(g);
    }
    let json = io::plain_json(&serde_json::json!({ "conditions": report, "gauges": gauges }))?;
    let mut out = Output::new("conditions", vec!["quantity", "value"], rows, json);
    out.ensemble_hash = Some(ens.content_hash());
    Ok(out)
}
