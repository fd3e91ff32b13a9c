use khessian::solver::{solve_exponential, solve_with_constant, SolveMode};
use khessian::torus::StoredField;

use super::{criteria, grid, problem, settings};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::report::{Report, Table};

/// A single solve, or the continuation schedule when ω is degenerate.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.omega.is_degenerate_form() {
        if super::mode(cfg) != SolveMode::Constant {
            return Err(LabError::Validation {
                key: "problem.mode".into(),
                message: "a degenerate ω needs the constant mode".into(),
            });
        }
        return criteria::continuation(cfg);
    }
    let g = grid(cfg)?;
    let prob = problem(cfg, cfg.omega.form(&g)?, cfg.density.density(&g)?)?;
    let set = settings(cfg);
    let rep = match prob.mode {
        SolveMode::Constant => solve_with_constant(&prob, &set)?,
        SolveMode::Exponential { .. } => solve_exponential(&prob, &set)?,
    };
    let mut report = Report::new("solve", cfg.experiment.seed);
    report.metric("residual_sup", rep.residual_sup);
    report.metric("residual_l1", rep.residual_l1);
    report.metric("newton_iters", rep.newton_iters as f64);
    report.metric("krylov_iters", rep.krylov_iters as f64);
    report.metric("osc", rep.osc);
    report.metric("cone_margin_min", rep.cone_margin_min);
    report.metric("ellipticity_min", rep.ellipticity_min);
    report.metric("floored_points", rep.floored_points as f64);
    if let Some(c) = rep.constant {
        report.metric("constant", c);
    }
    let mut trace = Table::new("newton", &["iteration", "residual"]);
    for (i, r) in rep.trace.iter().enumerate() {
        trace.push(vec![i.into(), (*r).into()]);
    }
    report.add_table(trace);
    report.fields.push(("phi".into(), StoredField::Potential(rep.phi)));
    Ok(report)
}
