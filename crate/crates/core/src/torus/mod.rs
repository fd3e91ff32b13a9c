//! Periodic-grid calculus on the flat torus `X = (ℝ/ℤ)^{2n}`.
//!
//! The complex structure is `z_j = x_j + i y_j` and the reference metric
//! `ω_X` is the identity matrix, so `dV_X := ω_X^n` makes every density a
//! plain ratio against the grid measure.

mod grid;
mod io;
mod kernel;
mod measure;
mod stencil;

use thiserror::Error;

use crate::algebra::AlgebraError;

pub use grid::{
    dot, neumaier_sum, slice_sum, DensityField, FormField, GridFunction, TorusGrid,
    MEASURE_NEG_TOL,
};
pub(crate) use grid::{pack, packed_len, CHUNK};
pub(crate) use kernel::{map_local, weighted_trace, FormView};
pub use io::{read_field, write_field, FieldKind, FieldMeta, StoredField, FORMAT_VERSION};
pub use measure::{
    ddc, discrete_stokes_integral, field_norms, hessian_measure, interface_residual,
    is_k_subharmonic, pointwise_max, stencil_interior, FieldNorms, HessianMeasure,
    SubharmonicCertificate,
};
pub(crate) use stencil::{local_form, weighted_trace_at};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value at grid index {index}")]
    NonFinite { index: usize },
    #[error("density value {value:e} at index {index} is negative")]
    NegativeDensity { index: usize, value: f64 },
    #[error("exponent p = {0} must be at least 1")]
    InvalidExponent(f64),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type Result<T> = std::result::Result<T, FieldError>;
