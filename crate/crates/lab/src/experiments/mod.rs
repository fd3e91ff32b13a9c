//! Experiment drivers. Each criterion driver returns a [`Report`] whose
//! checks carry the criterion's `AC` identifier.

pub mod criteria;
pub mod solve;

use khessian::solver::{HessianProblem, SolveMode, SolverSettings};
use khessian::{DensityField, FormField, TorusGrid};

use crate::config::{ExperimentConfig, ExperimentKind, ModeKind};
use crate::error::Result;
use crate::report::{Check, Report};

pub fn settings(cfg: &ExperimentConfig) -> SolverSettings {
    SolverSettings {
        tol: cfg.problem.tol,
        max_iter: cfg.problem.max_iter,
        ..SolverSettings::default()
    }
}

pub fn grid(cfg: &ExperimentConfig) -> Result<TorusGrid> {
    Ok(TorusGrid::new(cfg.problem.n, cfg.problem.points)?)
}

pub fn mode(cfg: &ExperimentConfig) -> SolveMode {
    match cfg.problem.mode {
        ModeKind::Constant => SolveMode::Constant,
        ModeKind::Exponential => SolveMode::Exponential { s: cfg.problem.s },
    }
}

pub fn problem(cfg: &ExperimentConfig, omega: FormField, density: DensityField) -> Result<HessianProblem> {
    Ok(HessianProblem::new(cfg.problem.k, omega, density, mode(cfg), cfg.problem.p)?)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = match cfg.experiment.kind {
        ExperimentKind::Solve => solve::run(cfg)?,
        ExperimentKind::Envelope => criteria::envelope_rate(cfg)?,
        ExperimentKind::Radial => criteria::radial_thresholds(cfg)?,
        ExperimentKind::Stability => criteria::stability(cfg)?,
        ExperimentKind::Oscillation => criteria::oscillation(cfg)?,
        ExperimentKind::Verify => verify_all(cfg),
    };
    report.experiment = cfg.experiment.kind.name().into();
    report.seed = cfg.experiment.seed;
    report.inputs = serde_json::to_value(cfg)?;
    report.warnings.splice(0..0, cfg.warnings.iter().cloned());
    Ok(report)
}

/// Runs the selected criteria; failures and errors are recorded, never
/// propagated.
pub fn verify_all(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new("verify", cfg.experiment.seed);
    for &id in &cfg.verify.criteria {
        let sub = criteria::criterion(cfg, id);
        report.absorb(&format!("ac{id}"), sub);
    }
    report
}

/// One summary line per criterion: passes iff all its checks pass.
pub fn criterion_line(report: &Report, id: &str) -> String {
    let checks: Vec<&Check> = report.checks.iter().filter(|c| c.id == id).collect();
    let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
    let parts: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{} {} {:.4e}/{:.4e}{}",
                c.name,
                if c.pass { "ok" } else { "fail" },
                c.measured,
                c.threshold,
                if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
            )
        })
        .collect();
    format!("{id} {} | {}", if pass { "PASS" } else { "FAIL" }, parts.join(" | "))
}
