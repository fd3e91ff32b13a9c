//! Allocation-free point kernels for the hot loops.
//!
//! `Local` stores a Hermitian matrix as separate real and imaginary parts so
//! that products run in plain `f64` arithmetic. Grid walks update neighbour
//! offsets incrementally instead of dividing the linear index at each point.

use rayon::prelude::*;

use super::grid::{packed_len, Offsets, CHUNK};
use super::{FormField, TorusGrid};
use crate::algebra::MAX_DIM;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Local {
    pub n: usize,
    pub re: [[f64; MAX_DIM]; MAX_DIM],
    pub im: [[f64; MAX_DIM]; MAX_DIM],
}

impl Local {
    #[inline]
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            re: [[0.0; MAX_DIM]; MAX_DIM],
            im: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    #[inline]
    pub fn from_packed(n: usize, p: &[f64]) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.re[i][i] = p[i];
        }
        let mut q = n;
        for i in 0..n {
            for j in i + 1..n {
                m.re[i][j] = p[q];
                m.re[j][i] = p[q];
                m.im[i][j] = p[q + 1];
                m.im[j][i] = -p[q + 1];
                q += 2;
            }
        }
        m
    }

    /// Writes the packed form scaled by `t`.
    #[inline]
    pub fn pack_scaled(&self, t: f64, out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i] = t * self.re[i][i];
        }
        let mut q = n;
        for i in 0..n {
            for j in i + 1..n {
                out[q] = t * self.re[i][j];
                out[q + 1] = t * self.im[i][j];
                q += 2;
            }
        }
    }

    /// Adds the discrete `dd^c v` at `idx`.
    #[inline]
    pub fn add_hessian(&mut self, values: &[f64], idx: usize, off: &Offsets, inv_h2: f64) {
        let n = self.n;
        let i = idx as isize;
        let at = |d: isize| values[(i + d) as usize];
        let c2 = 2.0 * values[idx];
        let pure = |a: usize| (at(off.plus[a]) - c2 + at(off.minus[a])) * inv_h2;
        let q = 0.25 * inv_h2;
        let mixed = |a: usize, b: usize| {
            (at(off.plus[a] + off.plus[b]) - at(off.plus[a] + off.minus[b])
                - at(off.minus[a] + off.plus[b])
                + at(off.minus[a] + off.minus[b]))
                * q
        };
        for j in 0..n {
            let (xj, yj) = (2 * j, 2 * j + 1);
            self.re[j][j] += 0.5 * (pure(xj) + pure(yj));
            for k in j + 1..n {
                let (xk, yk) = (2 * k, 2 * k + 1);
                let re = 0.5 * (mixed(xj, xk) + mixed(yj, yk));
                let im = 0.5 * (mixed(xj, yk) - mixed(yj, xk));
                self.re[j][k] += re;
                self.re[k][j] += re;
                self.im[j][k] += im;
                self.im[k][j] -= im;
            }
        }
    }

    /// `σ_0..=σ_k` and the transform `T_{k−1}` with `dσ_k(A)[B] = tr(T_{k−1}B)`,
    /// by the recursion `σ_{j+1} = tr(A T_j)/(j+1)`, `T_{j+1} = σ_{j+1} I − A T_j`.
    #[inline]
    pub fn sigma_transform(&self, k: usize) -> ([f64; MAX_DIM + 1], Local) {
        let n = self.n;
        let mut s = [0.0; MAX_DIM + 1];
        s[0] = 1.0;
        let mut t = Local::zeros(n);
        for i in 0..n {
            t.re[i][i] = 1.0;
        }
        for j in 0..k {
            // tr(A T) for Hermitian A, T is real.
            let mut tr = 0.0;
            for a in 0..n {
                for b in 0..n {
                    tr += self.re[a][b] * t.re[b][a] - self.im[a][b] * t.im[b][a];
                }
            }
            s[j + 1] = tr / (j + 1) as f64;
            if j + 1 < k {
                let mut next = Local::zeros(n);
                for a in 0..n {
                    for b in 0..n {
                        let (mut pr, mut pi) = (0.0, 0.0);
                        for c in 0..n {
                            pr += self.re[a][c] * t.re[c][b] - self.im[a][c] * t.im[c][b];
                            pi += self.re[a][c] * t.im[c][b] + self.im[a][c] * t.re[c][b];
                        }
                        next.re[a][b] = -pr;
                        next.im[a][b] = -pi;
                    }
                    next.re[a][a] += s[j + 1];
                }
                t = next;
            }
        }
        (s, t)
    }
}

/// Read access to a form field that avoids per-point unpacking overhead for
/// uniform forms.
pub(crate) enum FormView<'a> {
    Uniform(Local),
    Packed(&'a [f64], usize),
}

impl<'a> FormView<'a> {
    pub fn new(omega: &'a FormField) -> Self {
        let n = omega.grid().n();
        match omega.packed_slice() {
            Some(data) => FormView::Packed(data, n),
            None => {
                let pl = packed_len(n);
                let mut p = vec![0.0; pl];
                super::grid::pack(&omega.at(0), &mut p);
                FormView::Uniform(Local::from_packed(n, &p))
            }
        }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Local {
        match self {
            FormView::Uniform(m) => *m,
            FormView::Packed(data, n) => {
                let pl = packed_len(*n);
                Local::from_packed(*n, &data[idx * pl..(idx + 1) * pl])
            }
        }
    }
}

/// `tr(W dd^c v)` at `idx` with `W` packed.
#[inline]
pub(crate) fn weighted_trace(n: usize, values: &[f64], idx: usize, off: &Offsets, inv_h2: f64, w: &[f64]) -> f64 {
    let i = idx as isize;
    let at = |d: isize| values[(i + d) as usize];
    let c2 = 2.0 * values[idx];
    let pure = |a: usize| at(off.plus[a]) - c2 + at(off.minus[a]);
    let mixed = |a: usize, b: usize| {
        at(off.plus[a] + off.plus[b]) - at(off.plus[a] + off.minus[b])
            - at(off.minus[a] + off.plus[b])
            + at(off.minus[a] + off.minus[b])
    };
    let mut acc = 0.0;
    for j in 0..n {
        acc += w[j] * 0.5 * (pure(2 * j) + pure(2 * j + 1));
    }
    let mut p = n;
    let mut off_acc = 0.0;
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        for k in j + 1..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            let re = mixed(xj, xk) + mixed(yj, yk);
            let im = mixed(xj, yk) - mixed(yj, xk);
            // 2·(w_re·½re + w_im·½im)/4 with the mixed-stencil factor ¼
            off_acc += w[p] * re + w[p + 1] * im;
            p += 2;
        }
    }
    (acc + 0.25 * off_acc) * inv_h2
}

impl TorusGrid {
    /// Calls `f(idx, offsets)` for `idx` in `start..end`, in order.
    #[inline]
    pub(crate) fn walk<F: FnMut(usize, &Offsets)>(&self, start: usize, end: usize, mut f: F) {
        if start >= end {
            return;
        }
        let axes = self.axes();
        let size = self.size();
        let mut coords = [0usize; 2 * MAX_DIM];
        let mut off = self.neighbour_offsets(start);
        for (a, c) in coords.iter_mut().enumerate().take(axes) {
            *c = self.coordinate(start, a);
        }
        for idx in start..end {
            f(idx, &off);
            let mut a = axes;
            while a > 0 {
                a -= 1;
                coords[a] += 1;
                if coords[a] == size {
                    coords[a] = 0;
                }
                let (p, m) = self.axis_offsets(a, coords[a]);
                off.plus[a] = p;
                off.minus[a] = m;
                if coords[a] != 0 {
                    break;
                }
            }
        }
    }

    /// Evaluates `f` on every point in parallel chunks, walking offsets.
    pub(crate) fn map_walk<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(usize, &Offsets) -> T + Sync,
    {
        let mut out = vec![T::default(); self.len()];
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            self.walk(base, base + chunk.len(), |i, off| chunk[i - base] = f(i, off));
        });
        out
    }

    #[inline]
    pub(crate) fn inv_h2(&self) -> f64 {
        (self.size() * self.size()) as f64
    }
}

/// Local form `ω + dd^c v` at every point, mapped through `f`.
pub(crate) fn map_local<T, F>(omega: &FormField, values: &[f64], f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize, &Local) -> T + Sync,
{
    let grid = omega.grid();
    let view = FormView::new(omega);
    let inv_h2 = grid.inv_h2();
    grid.map_walk(|i, off| {
        let mut a = view.get(i);
        a.add_hessian(values, i, off, inv_h2);
        f(i, &a)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sigma_with_transform;
    use crate::torus::{local_form, weighted_trace_at, GridFunction};
    use std::f64::consts::PI;

    #[test]
    fn kernels_match_reference_route() {
        let g = TorusGrid::new(3, 6).unwrap();
        let phi = GridFunction::from_fn(&g, |x| {
            0.05 * (2.0 * PI * (x[0] + 2.0 * x[3])).sin() + 0.03 * (2.0 * PI * (x[1] - x[5])).cos()
        });
        let v = GridFunction::from_fn(&g, |x| (2.0 * PI * (x[2] + x[4])).cos() + x[0] * 0.0);
        let om = FormField::reference(&g).shifted(0.5);
        let pl = packed_len(3);
        let inv_h2 = g.inv_h2();
        let mut count = 0;
        g.walk(0, g.len(), |i, off| {
            let r = local_form(&om, phi.values(), i);
            let mut a = FormView::new(&om).get(i);
            a.add_hessian(phi.values(), i, off, inv_h2);
            for k in 1..=3 {
                let (s1, t1) = sigma_with_transform(&r, k);
                let (s2, t2) = a.sigma_transform(k);
                for j in 0..=k {
                    assert!((s1[j] - s2[j]).abs() < 1e-11 * (1.0 + s1[j].abs()));
                }
                let mut w = vec![0.0; pl];
                crate::torus::pack(&t1, &mut w);
                let mut w2 = vec![0.0; pl];
                t2.pack_scaled(1.0, &mut w2);
                for (x, y) in w.iter().zip(&w2) {
                    assert!((x - y).abs() < 1e-11 * (1.0 + x.abs()));
                }
                let e1 = weighted_trace_at(&g, v.values(), i, &w);
                let e2 = weighted_trace(3, v.values(), i, off, inv_h2, &w);
                assert!((e1 - e2).abs() < 1e-9 * (1.0 + e1.abs()));
            }
            count += 1;
        });
        assert_eq!(count, g.len());
    }
}
