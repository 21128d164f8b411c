mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "randprod", version, about = "Spectral and Monte Carlo experiments on random matrix products")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of the summary printed to stdout. Both formats are always
    /// written to the output directory.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate untilted paths for every n.
    Simulate,
    /// Dominant eigenvalue and residuals on the Chebyshev nodes.
    Spectrum,
    /// Cumulants, the Lambda curve and the Cramér series.
    Cumulants,
    /// Tilt parameters for every (n, y, tail).
    Tilt,
    /// Run a limit-theorem check; exits 2 when a criterion fails.
    Verify {
        #[arg(value_enum)]
        theorem: VerifyKind,
    },
    /// Tables of the smoothing density and its Fourier transform.
    Smoothing,
    /// Standing-condition diagnostics of the ensemble.
    Conditions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Be,
    Edgeworth,
    Md,
    Llt,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = load(&cli).and_then(|cfg| {
        let exec = run::execution(cli.threads)?;
        run::run(&cli.command, &cfg, exec, cli.format)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
