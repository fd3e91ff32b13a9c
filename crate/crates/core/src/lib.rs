//! Numerical laboratory for complex k-Hessian equations.
//!
//! * [`algebra`]: relative eigenvalues, elementary symmetric functions,
//!   Γ_k cone certificates and Gårding-type mixed values.
//! * [`torus`]: periodic grids on the flat torus, discrete `dd^c`, Hessian
//!   measures and field I/O.
//! * [`solver`]: damped Newton solvers for `H_k(φ) = e^{sφ} g` and
//!   `H_k(φ) = c f`, plus the continuation for semi-positive forms.
//! * [`envelope`]: envelopes `P_{ω,k}(u)` by exponential penalization and an
//!   independent sweep oracle.
//! * [`radial`]: the 1D radial reduction on balls in `ℂ^n`.

pub mod algebra;
pub mod envelope;
pub mod krylov;
pub mod radial;
pub mod solver;
pub mod torus;

pub use algebra::{HermitianMatrix, SigmaValues, ConeCertificate};
pub use torus::{DensityField, FormField, GridFunction, TorusGrid};
