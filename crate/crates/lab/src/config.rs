//! Experiment configuration: `key = value` pairs in named sections (TOML).
//!
//! ```text
//! [experiment]
//! kind = "stability"        # solve | envelope | radial | stability | oscillation | verify
//! seed = 7
//!
//! [problem]
//! n = 3
//! k = 2
//! N = 8
//! mode = "constant"         # or "exponential" (then `s` is used)
//!
//! [density]
//! preset = "const"
//! value = 1.0
//! ```
//!
//! Every section and key is optional except `experiment.kind`; unknown keys
//! are rejected.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::presets::{DensityPreset, OmegaPreset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Envelope,
    Radial,
    Stability,
    Oscillation,
    Verify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Envelope => "envelope",
            Self::Radial => "radial",
            Self::Stability => "stability",
            Self::Oscillation => "oscillation",
            Self::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Constant,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub density: DensityPreset,
    #[serde(default)]
    pub omega: OmegaPreset,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub oscillation: OscillationSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub radial: RadialSection,
    #[serde(default)]
    pub verify: VerifySection,
    /// Set during validation, never read from the file.
    #[serde(skip_deserializing, default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub points: usize,
    pub mode: ModeKind,
    pub s: f64,
    pub p: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub j_max: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            points: 8,
            mode: ModeKind::Constant,
            s: 1.0,
            p: 2.0,
            tol: 1e-8,
            max_iter: 200,
            j_max: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub ts: Vec<f64>,
    /// The perturbation is `η = amplitude · sin(2π x_axis)`.
    pub eta_amplitude: f64,
    pub eta_axis: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            ts: vec![0.2, 0.1, 0.05, 0.025],
            eta_amplitude: 1.0,
            eta_axis: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillationSection {
    pub exponent: f64,
    pub caps: Vec<f64>,
    pub max_ratio: f64,
}

impl Default for OscillationSection {
    fn default() -> Self {
        Self {
            exponent: 2.5,
            caps: vec![1e1, 1e2, 1e3, 1e4],
            max_ratio: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeSection {
    /// Obstacle `u = −amplitude · cos(2π x_axis)`.
    pub obstacle_amplitude: f64,
    pub obstacle_axis: usize,
    pub schedule: Vec<usize>,
    pub oracle: bool,
    pub oracle_max_sweeps: usize,
    /// Contact tolerance in units of `h²`.
    pub contact_tol_h2: f64,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        Self {
            obstacle_amplitude: 0.1,
            obstacle_axis: 0,
            schedule: khessian::envelope::default_schedule(),
            oracle: true,
            oracle_max_sweeps: 1_000_000,
            contact_tol_h2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialSection {
    /// Empty means the default grid around the thresholds.
    pub bs: Vec<f64>,
    pub deltas: Vec<f64>,
    pub p: f64,
    pub rho_min: f64,
    pub m: usize,
}

impl Default for RadialSection {
    fn default() -> Self {
        Self {
            bs: Vec::new(),
            deltas: vec![0.5, 0.25, 0.125],
            p: 1.0,
            rho_min: 1e-10,
            m: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Criteria to run, by number.
    pub criteria: Vec<u32>,
    pub garding_samples: usize,
    pub manufactured_sizes: Vec<usize>,
    pub comparison_pairs: usize,
    pub stokes_fields: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            criteria: (1..=10).collect(),
            garding_samples: 10_000,
            manufactured_sizes: vec![8, 12, 16],
            comparison_pairs: 20,
            stokes_fields: 100,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        LabError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validated()
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn invalid(key: &str, message: impl Into<String>) -> LabError {
    LabError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// A config of the given kind with every default applied.
    pub fn with_kind(kind: ExperimentKind) -> Self {
        Self {
            experiment: ExperimentSection {
                kind,
                seed: 0,
                out: None,
            },
            problem: ProblemSection::default(),
            density: DensityPreset::default(),
            omega: OmegaPreset::default(),
            stability: StabilitySection::default(),
            oscillation: OscillationSection::default(),
            envelope: EnvelopeSection::default(),
            radial: RadialSection::default(),
            verify: VerifySection::default(),
            warnings: Vec::new(),
        }
    }

    pub fn validated(mut self) -> Result<Self> {
        let p = &self.problem;
        if !(1..=khessian::algebra::MAX_DIM).contains(&p.n) {
            return Err(invalid("problem.n", format!("n = {} outside 1..={}", p.n, khessian::algebra::MAX_DIM)));
        }
        if p.k == 0 || p.k > p.n {
            return Err(invalid("problem.k", format!("k = {} outside 1..={}", p.k, p.n)));
        }
        if p.points < 4 || p.points % 2 != 0 {
            return Err(invalid("problem.N", format!("N = {} must be even and ≥ 4", p.points)));
        }
        if !(p.s > 0.0 && p.s.is_finite()) {
            return Err(invalid("problem.s", format!("s = {} must be positive", p.s)));
        }
        if !(p.p >= 1.0) {
            return Err(invalid("problem.p", format!("p = {} must be ≥ 1", p.p)));
        }
        if !(p.tol > 0.0) {
            return Err(invalid("problem.tol", "tolerance must be positive"));
        }
        if p.max_iter == 0 {
            return Err(invalid("problem.max_iter", "must be positive"));
        }
        let ratio = p.n as f64 / p.k as f64;
        if p.p <= ratio {
            self.warnings.push(format!(
                "p = {} does not exceed n/k = {ratio}; uniform bounds are not expected",
                p.p
            ));
        }
        self.density.validate("density", p.n)?;
        self.omega.validate("omega", p.n)?;
        if self.stability.ts.iter().any(|t| !(*t >= 0.0)) {
            return Err(invalid("stability.ts", "perturbation sizes must be ≥ 0"));
        }
        if self.stability.eta_axis >= 2 * p.n {
            return Err(invalid("stability.eta_axis", "axis out of range"));
        }
        if self.oscillation.caps.is_empty() || self.oscillation.caps.iter().any(|m| !(*m > 0.0)) {
            return Err(invalid("oscillation.caps", "need at least one positive cap"));
        }
        let sched = &self.envelope.schedule;
        if sched.is_empty() || sched[0] == 0 || sched.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("envelope.schedule", "must be positive and increasing"));
        }
        if self.envelope.obstacle_axis >= 2 * p.n {
            return Err(invalid("envelope.obstacle_axis", "axis out of range"));
        }
        if !(self.envelope.contact_tol_h2 > 0.0) {
            return Err(invalid("envelope.contact_tol_h2", "must be positive"));
        }
        let r = &self.radial;
        if !(r.rho_min > 0.0 && r.rho_min < 1.0) {
            return Err(invalid("radial.rho_min", "must lie in (0, 1)"));
        }
        if r.m < 5 {
            return Err(invalid("radial.m", "need at least 5 points"));
        }
        if r.deltas.is_empty() || r.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(invalid("radial.deltas", "need positive margins"));
        }
        if !(r.p >= 1.0) {
            return Err(invalid("radial.p", "must be ≥ 1"));
        }
        if let Some(c) = self.verify.criteria.iter().find(|c| !(1..=10).contains(*c)) {
            return Err(invalid("verify.criteria", format!("unknown criterion {c}")));
        }
        if self.verify.manufactured_sizes.len() < 2
            || self.verify.manufactured_sizes.iter().any(|s| *s < 4 || s % 2 != 0)
        {
            return Err(invalid("verify.manufactured_sizes", "need ≥ 2 even sizes ≥ 4"));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_solve_config_gets_defaults() {
        let cfg = parse_config(
            "[experiment]\nkind = \"solve\"\n[problem]\nn = 3\nk = 2\nN = 8\n[density]\npreset = \"const\"\n",
        )
        .unwrap();
        assert_eq!(cfg.problem.tol, 1e-8);
        assert_eq!(cfg.problem.max_iter, 200);
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn low_exponent_is_flagged() {
        let cfg = parse_config("[experiment]\nkind = \"solve\"\n[problem]\np = 1.0\n").unwrap();
        assert_eq!(cfg.warnings.len(), 1);
    }

    #[test]
    fn degree_above_dimension_is_rejected() {
        let err = parse_config("[experiment]\nkind = \"solve\"\n[problem]\nn = 3\nk = 5\n").unwrap_err();
        assert!(matches!(err, LabError::Validation { ref key, .. } if key == "problem.k"), "{err}");
    }

    #[test]
    fn unknown_keys_report_their_position() {
        let err = parse_config("[experiment]\nkind = \"solve\"\n[problem]\nn = 3\nbogus = 1\n").unwrap_err();
        match err {
            LabError::Parse { line, column, .. } => assert_eq!((line, column), (5, 1)),
            other => panic!("{other}"),
        }
    }
}
