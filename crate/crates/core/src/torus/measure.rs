use rayon::prelude::*;

use super::grid::{packed_len, slice_sum, CHUNK};
use super::kernel::{map_local, Local};
use super::stencil::complex_hessian_at;
use super::{DensityField, FieldError, FormField, GridFunction, Result};
use crate::algebra::binomial;

fn check_degree(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(FieldError::DimensionMismatch(format!(
            "degree k = {k} outside 1..={n}"
        )))
    } else {
        Ok(())
    }
}

/// Discrete `dd^c φ`.
pub fn ddc(phi: &GridFunction) -> FormField {
    let grid = phi.grid();
    let pl = packed_len(grid.n());
    let values = phi.values();
    let mut data = vec![0.0; pl * grid.len()];
    let inv_h2 = grid.inv_h2();
    data.par_chunks_mut(pl * CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * CHUNK;
            grid.walk(base, base + chunk.len() / pl, |i, off| {
                let mut m = Local::zeros(grid.n());
                m.add_hessian(values, i, off, inv_h2);
                m.pack_scaled(1.0, &mut chunk[(i - base) * pl..(i - base + 1) * pl]);
            });
        });
    FormField::from_packed(grid.clone(), data)
}

/// Grid integral of `tr(dd^c φ)`, i.e. `∫ dd^c φ ∧ ω_X^{n−1}` up to a
/// constant. Vanishes on a periodic grid.
pub fn discrete_stokes_integral(phi: &GridFunction) -> f64 {
    let grid = phi.grid();
    let values = phi.values();
    grid.sum_points(|i| complex_hessian_at(grid, values, i).trace()) / grid.len() as f64
}

/// Pointwise density of `(ω + dd^c φ)^k ∧ ω_X^{n−k}` against `ω_X^n`.
#[derive(Clone, Debug)]
pub struct HessianMeasure {
    pub density: DensityField,
    /// Grid average of the density.
    pub total_mass: f64,
}

pub fn hessian_measure(omega: &FormField, phi: &GridFunction, k: usize) -> Result<HessianMeasure> {
    let grid = phi.grid();
    grid.check_same(omega.grid())?;
    check_degree(k, grid.n())?;
    let ck = binomial(grid.n(), k);
    let values = phi.values();
    let dens = map_local(omega, values, |_, a| a.sigma_transform(k).0[k] / ck);
    let total_mass = slice_sum(&dens) / grid.len() as f64;
    Ok(HessianMeasure {
        density: DensityField::from_raw(grid.clone(), dens),
        total_mass,
    })
}

/// Grid-wide Γ_k certificate of `ω + dd^c φ`.
#[derive(Clone, Debug)]
pub struct SubharmonicCertificate {
    pub member: bool,
    pub worst_margin: f64,
    pub worst_index: usize,
    /// Per-point `min_{j≤k} σ_j / C(n, j)`.
    pub margins: Vec<f64>,
}

pub(crate) fn point_margin(a: &Local, k: usize) -> f64 {
    let n = a.n;
    let s = a.sigma_transform(k).0;
    (1..=k)
        .map(|j| s[j] / binomial(n, j))
        .fold(f64::INFINITY, f64::min)
}

pub fn is_k_subharmonic(
    omega: &FormField,
    phi: &GridFunction,
    k: usize,
) -> Result<SubharmonicCertificate> {
    let grid = phi.grid();
    grid.check_same(omega.grid())?;
    check_degree(k, grid.n())?;
    let values = phi.values();
    let margins = map_local(omega, values, |_, a| point_margin(a, k));
    let (worst_index, worst_margin) = margins
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, m)| if m < acc.1 { (i, m) } else { acc });
    Ok(SubharmonicCertificate {
        member: worst_margin > 0.0,
        worst_margin,
        worst_index,
        margins,
    })
}

/// Norms and extrema of a scalar field, all against the normalized grid
/// measure.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FieldNorms {
    pub lp: f64,
    pub sup: f64,
    pub inf: f64,
    pub osc: f64,
    pub mean: f64,
}

pub fn field_norms(values: &[f64], p: f64) -> Result<FieldNorms> {
    if !(p >= 1.0) {
        return Err(FieldError::InvalidExponent(p));
    }
    let m = values.len() as f64;
    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    let lp = if p.is_infinite() {
        values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    } else {
        let powered: Vec<f64> = values.par_iter().map(|v| v.abs().powf(p)).collect();
        (slice_sum(&powered) / m).powf(1.0 / p)
    };
    Ok(FieldNorms {
        lp,
        sup,
        inf,
        osc: sup - inf,
        mean: slice_sum(values) / m,
    })
}

pub fn pointwise_max(phi: &GridFunction, psi: &GridFunction) -> Result<GridFunction> {
    phi.grid().check_same(psi.grid())?;
    let values = phi
        .values()
        .par_iter()
        .zip(psi.values().par_iter())
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok(GridFunction::from_raw(phi.grid().clone(), values))
}

/// Points whose whole finite-difference stencil lies in `{φ > ψ + δ}`.
pub fn stencil_interior(phi: &GridFunction, psi: &GridFunction, delta: f64) -> Result<Vec<bool>> {
    let grid = phi.grid();
    grid.check_same(psi.grid())?;
    let (a, b) = (phi.values(), psi.values());
    Ok(grid.map_points(|i| {
        grid.stencil_points(i)
            .into_iter()
            .all(|j| a[j] > b[j] + delta)
    }))
}

/// `H_k(max(φ, ψ)) − max(H_k(φ), H_k(ψ))` at every point; the discrete
/// interface mass is reported, not asserted.
pub fn interface_residual(
    omega: &FormField,
    phi: &GridFunction,
    psi: &GridFunction,
    k: usize,
) -> Result<Vec<f64>> {
    let m = pointwise_max(phi, psi)?;
    let hm = hessian_measure(omega, &m, k)?;
    let hp = hessian_measure(omega, phi, k)?;
    let hq = hessian_measure(omega, psi, k)?;
    Ok(hm
        .density
        .values()
        .iter()
        .zip(hp.density.values().iter().zip(hq.density.values()))
        .map(|(x, (p, q))| x - p.max(*q))
        .collect())
}
