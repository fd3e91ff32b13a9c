//! Second-order central differences for the complex Hessian.
//!
//! `dd^c φ = 2i ∂∂̄φ`, so the coefficient matrix is
//! `A_jk = ½(φ_{x_j x_k} + φ_{y_j y_k}) + (i/2)(φ_{x_j y_k} − φ_{y_j x_k})`.
//! Pure second derivatives use the 3-point stencil and mixed ones the
//! 4-point diagonal stencil, both with periodic wrap.

use num_complex::Complex64;

use super::grid::TorusGrid;
use super::FormField;
use crate::algebra::HermitianMatrix;

#[inline]
pub(crate) fn complex_hessian_at(grid: &TorusGrid, values: &[f64], idx: usize) -> HermitianMatrix {
    let n = grid.n();
    let off = grid.neighbour_offsets(idx);
    let i = idx as isize;
    let at = |d: isize| values[(i + d) as usize];
    let centre = values[idx];
    let inv_h2 = (grid.size() * grid.size()) as f64;
    let pure = |a: usize| (at(off.plus[a]) - 2.0 * centre + at(off.minus[a])) * inv_h2;
    let mixed = |a: usize, b: usize| {
        (at(off.plus[a] + off.plus[b]) - at(off.plus[a] + off.minus[b])
            - at(off.minus[a] + off.plus[b])
            + at(off.minus[a] + off.minus[b]))
            * (0.25 * inv_h2)
    };
    let mut m = HermitianMatrix::zeros(n);
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        m.set_pair(j, j, Complex64::new(0.5 * (pure(xj) + pure(yj)), 0.0));
        for k in j + 1..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            let re = 0.5 * (mixed(xj, xk) + mixed(yj, yk));
            let im = 0.5 * (mixed(xj, yk) - mixed(yj, xk));
            m.set_pair(j, k, Complex64::new(re, im));
        }
    }
    m
}

/// `ω + dd^c φ` at one point.
#[inline]
pub(crate) fn local_form(omega: &FormField, values: &[f64], idx: usize) -> HermitianMatrix {
    omega.at(idx).add(&complex_hessian_at(omega.grid(), values, idx))
}

/// `tr(W · dd^c v)` at one point, with `W` given in packed form.
#[inline]
pub(crate) fn weighted_trace_at(grid: &TorusGrid, values: &[f64], idx: usize, w: &[f64]) -> f64 {
    let n = grid.n();
    let b = complex_hessian_at(grid, values, idx);
    let mut acc = 0.0;
    for j in 0..n {
        acc += w[j] * b.get(j, j).re;
    }
    let mut p = n;
    for j in 0..n {
        for k in j + 1..n {
            let z = b.get(j, k);
            acc += 2.0 * (w[p] * z.re + w[p + 1] * z.im);
            p += 2;
        }
    }
    acc
}
