use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use khessian_lab::{load_config, run_experiment, write_report, ExperimentConfig, ExperimentKind, LabError};

/// Numerical laboratory for complex k-Hessian equations on flat tori.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 solver failure.
#[derive(Parser)]
#[command(name = "khessian-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem (or a continuation schedule for a degenerate ω).
    Solve(Common),
    /// Penalized envelope, rate table and oracle comparison.
    Envelope(Common),
    /// Radial threshold scan.
    Radial(Common),
    /// Stability t-scan.
    Stability(Common),
    /// Oscillation over a truncated-singularity family.
    Oscillation(Common),
    /// Run the acceptance criteria.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all randomness (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid operations.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Solve(c) => (ExperimentKind::Solve, c),
        Command::Envelope(c) => (ExperimentKind::Envelope, c),
        Command::Radial(c) => (ExperimentKind::Radial, c),
        Command::Stability(c) => (ExperimentKind::Stability, c),
        Command::Oscillation(c) => (ExperimentKind::Oscillation, c),
        Command::Verify(c) => (ExperimentKind::Verify, c),
    };
    match run(kind, common) {
        Ok(pass) => ExitCode::from(if pass { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(kind: ExperimentKind, common: Common) -> Result<bool, LabError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::with_kind(kind),
    };
    if cfg.experiment.kind != kind {
        return Err(LabError::Validation {
            key: "experiment.kind".into(),
            message: format!("config is for `{}`, subcommand is `{}`", cfg.experiment.kind.name(), kind.name()),
        });
    }
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.experiment.out = Some(out);
    }
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| LabError::Validation { key: "--threads".into(), message: e.to_string() })?;
    }
    let report = run_experiment(&cfg)?;
    for check in &report.checks {
        println!("{}", check.line());
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let dir = cfg.experiment.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    for path in write_report(&report, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(report.all_pass())
}
