//! Named presets for densities and reference forms.

use khessian::{DensityField, FormField, HermitianMatrix, TorusGrid};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{LabError, Result};

pub const PRESETS: [&str; 4] = ["const", "sine", "slice-degenerate", "truncated-singularity"];

/// Shared parameter block; which keys matter depends on `preset`.
///
/// * `const`: `value`
/// * `sine`: `value + amplitude·sin(2π x_axis)`
/// * `slice-degenerate`: `value·sin²(π x_axis)` (densities) or
///   `diag(sin²(π x_axis), 1, …, 1)` (forms); vanishes on `x_axis = 0`
/// * `truncated-singularity`: `min(r^{−exponent}, cap)` with `r` the periodic
///   distance to the origin (densities only)
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PresetSpec {
    pub preset: String,
    pub value: f64,
    pub amplitude: f64,
    pub axis: usize,
    pub exponent: f64,
    pub cap: f64,
}

impl Default for PresetSpec {
    fn default() -> Self {
        Self {
            preset: "const".into(),
            value: 1.0,
            amplitude: 0.5,
            axis: 0,
            exponent: 2.5,
            cap: 1e2,
        }
    }
}

pub type DensityPreset = PresetSpec;
pub type OmegaPreset = PresetSpec;

fn invalid(section: &str, key: &str, message: impl Into<String>) -> LabError {
    LabError::Validation {
        key: format!("{section}.{key}"),
        message: message.into(),
    }
}

/// Periodic distance from the origin.
pub fn torus_radius(x: &[f64]) -> f64 {
    x.iter()
        .map(|&c| {
            let d = c.min(1.0 - c);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl PresetSpec {
    pub fn named(preset: &str) -> Self {
        Self {
            preset: preset.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self, section: &str, n: usize) -> Result<()> {
        if !PRESETS.contains(&self.preset.as_str()) {
            return Err(invalid(
                section,
                "preset",
                format!("unknown preset {:?}; expected one of {PRESETS:?}", self.preset),
            ));
        }
        if self.axis >= 2 * n {
            return Err(invalid(section, "axis", format!("axis {} ≥ 2n = {}", self.axis, 2 * n)));
        }
        if !self.value.is_finite() || !self.amplitude.is_finite() {
            return Err(invalid(section, "value", "parameters must be finite"));
        }
        let density = section == "density";
        match self.preset.as_str() {
            "const" if !(self.value > 0.0) => Err(invalid(section, "value", "must be positive")),
            "sine" if !(self.value > self.amplitude.abs()) => {
                Err(invalid(section, "amplitude", "need |amplitude| < value for positivity"))
            }
            "slice-degenerate" if !(self.value > 0.0) => Err(invalid(section, "value", "must be positive")),
            "truncated-singularity" if !density => {
                Err(invalid(section, "preset", "truncated-singularity is a density preset"))
            }
            "truncated-singularity" if !(self.exponent > 0.0 && self.cap > 0.0) => {
                Err(invalid(section, "cap", "exponent and cap must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn density(&self, grid: &TorusGrid) -> Result<DensityField> {
        self.validate("density", grid.n())?;
        let (v, a, ax) = (self.value, self.amplitude, self.axis);
        Ok(match self.preset.as_str() {
            "const" => DensityField::constant(grid, v),
            "sine" => DensityField::from_fn(grid, |x| v + a * (2.0 * PI * x[ax]).sin()),
            "slice-degenerate" => DensityField::from_fn(grid, |x| v * (PI * x[ax]).sin().powi(2)),
            _ => truncated_singularity(grid, self.exponent, self.cap),
        })
    }

    pub fn form(&self, grid: &TorusGrid) -> Result<FormField> {
        self.validate("omega", grid.n())?;
        let n = grid.n();
        let (v, a, ax) = (self.value, self.amplitude, self.axis);
        let form = match self.preset.as_str() {
            "const" => FormField::reference(grid).scaled(v),
            "sine" => FormField::from_fn(grid, |x| {
                HermitianMatrix::identity(n).scaled(v + a * (2.0 * PI * x[ax]).sin())
            })?,
            _ => FormField::from_fn(grid, |x| {
                let mut d = vec![v; n];
                d[0] = v * (PI * x[ax]).sin().powi(2);
                HermitianMatrix::from_diag(&d)
            })?,
        };
        Ok(form)
    }

    pub fn is_degenerate_form(&self) -> bool {
        self.preset == "slice-degenerate"
    }
}

/// Cell averages of `min(r^{−exponent}, cap)` over the grid cells (midpoint
/// rule on `s^{2n}` sub-cells, finer near the singular point). Point samples
/// would put the whole cap on one node, whose `L^p` mass m·h^{2n/p} grows
/// without bound in `m`; cell averages keep the discrete norm below the
/// continuum one.
pub fn truncated_singularity(grid: &TorusGrid, exponent: f64, cap: f64) -> DensityField {
    let h = grid.h();
    let dim = 2 * grid.n();
    let f = |x: &[f64]| {
        let r = torus_radius(x);
        if r == 0.0 {
            cap
        } else {
            r.powf(-exponent).min(cap)
        }
    };
    DensityField::from_fn(grid, |x| {
        let s: usize = if torus_radius(x) < 2.5 * h { 6 } else { 2 };
        let total = s.pow(dim as u32);
        let mut y = x.to_vec();
        let mut sum = 0.0;
        for mut idx in 0..total {
            for (a, ya) in y.iter_mut().enumerate() {
                let q = idx % s;
                idx /= s;
                *ya = x[a] + h * ((q as f64 + 0.5) / s as f64 - 0.5);
            }
            sum += f(&y);
        }
        sum / total as f64
    })
}
