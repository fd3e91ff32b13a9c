use num_complex::Complex64;
use rayon::prelude::*;

use super::{FieldError, Result};
use crate::algebra::{HermitianMatrix, MAX_DIM};

/// Points handled per parallel task; fixed so reductions are reproducible
/// regardless of the worker count.
pub(crate) const CHUNK: usize = 4096;

const MAX_AXES: usize = 2 * MAX_DIM;

/// Periodic grid on `(ℝ/ℤ)^{2n}` with `N` points per axis.
///
/// Axes are ordered `(x_1, y_1, …, x_n, y_n)` and values are stored
/// row-major, so `y_n` varies fastest. Coordinate `i` on an axis sits at
/// `i·h` with `h = 1/N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
    size: usize,
    len: usize,
    strides: [usize; MAX_AXES],
    plus: Vec<isize>,
    minus: Vec<isize>,
}

impl TorusGrid {
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(FieldError::InvalidGrid(format!(
                "complex dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        if size < 4 || size % 2 != 0 {
            return Err(FieldError::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {size}"
            )));
        }
        let axes = 2 * n;
        let len = size
            .checked_pow(axes as u32)
            .ok_or_else(|| FieldError::InvalidGrid("grid too large".into()))?;
        let mut strides = [0usize; MAX_AXES];
        let mut s = 1;
        for a in (0..axes).rev() {
            strides[a] = s;
            s *= size;
        }
        let mut plus = vec![0isize; axes * size];
        let mut minus = vec![0isize; axes * size];
        for a in 0..axes {
            for c in 0..size {
                let up = (c + 1) % size;
                let down = (c + size - 1) % size;
                plus[a * size + c] = (up as isize - c as isize) * strides[a] as isize;
                minus[a * size + c] = (down as isize - c as isize) * strides[a] as isize;
            }
        }
        Ok(Self {
            n,
            size,
            len,
            strides,
            plus,
            minus,
        })
    }

    /// Complex dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per axis.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn axes(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.size as f64
    }

    /// Total number of grid points, `N^{2n}`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    #[inline]
    pub fn coordinate(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.size
    }

    pub fn coordinates(&self, idx: usize) -> Vec<usize> {
        (0..self.axes()).map(|a| self.coordinate(idx, a)).collect()
    }

    /// Physical position of a point, one entry per axis.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        let h = self.h();
        (0..self.axes())
            .map(|a| self.coordinate(idx, a) as f64 * h)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(a, &c)| (c % self.size) * self.strides[a])
            .sum()
    }

    /// Signed index offsets to the `+1` and `−1` neighbours along every axis.
    #[inline]
    pub(crate) fn neighbour_offsets(&self, idx: usize) -> Offsets {
        let mut off = Offsets {
            plus: [0; MAX_AXES],
            minus: [0; MAX_AXES],
        };
        for a in 0..self.axes() {
            let c = (idx / self.strides[a]) % self.size;
            off.plus[a] = self.plus[a * self.size + c];
            off.minus[a] = self.minus[a * self.size + c];
        }
        off
    }

    #[inline]
    pub(crate) fn axis_offsets(&self, axis: usize, coord: usize) -> (isize, isize) {
        let k = axis * self.size + coord;
        (self.plus[k], self.minus[k])
    }

    /// Every index read by the second-order stencil at `idx` (the point,
    /// its axis neighbours and the diagonal neighbours of every axis pair).
    pub fn stencil_points(&self, idx: usize) -> Vec<usize> {
        let off = self.neighbour_offsets(idx);
        let i = idx as isize;
        let axes = self.axes();
        let mut pts = vec![idx];
        for a in 0..axes {
            pts.push((i + off.plus[a]) as usize);
            pts.push((i + off.minus[a]) as usize);
        }
        for a in 0..axes {
            for b in a + 1..axes {
                for da in [off.plus[a], off.minus[a]] {
                    for db in [off.plus[b], off.minus[b]] {
                        pts.push((i + da + db) as usize);
                    }
                }
            }
        }
        pts
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self.n != other.n || self.size != other.size {
            Err(FieldError::DimensionMismatch(format!(
                "grid (n={}, N={}) vs (n={}, N={})",
                self.n, self.size, other.n, other.size
            )))
        } else {
            Ok(())
        }
    }

    /// Evaluates `f` at every point in parallel; each output slot has one writer.
    pub fn map_points<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn(usize) -> T + Sync,
    {
        let mut out = vec![T::default(); self.len];
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (o, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(base + o);
                }
            });
        out
    }

    /// Sums `f` over the grid with a fixed reduction order.
    pub fn sum_points<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let partials: Vec<f64> = (0..self.len.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(self.len);
                neumaier_sum((start..end).map(&f))
            })
            .collect();
        neumaier_sum(partials.into_iter())
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Offsets {
    pub plus: [isize; MAX_AXES],
    pub minus: [isize; MAX_AXES],
}

/// Compensated summation.
pub fn neumaier_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Deterministic sum of a slice.
pub fn slice_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| neumaier_sum(c.iter().copied()))
        .collect();
    neumaier_sum(partials.into_iter())
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Real scalar field on the torus (a potential).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f(position)` at every grid point.
    pub fn from_fn<F>(grid: &TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = grid.map_points(|i| f(&grid.position(i)));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        slice_sum(&self.values) / self.values.len() as f64
    }

    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Periodic multilinear interpolation onto another grid of the same
    /// dimension (a warm start across resolutions).
    pub fn resample(&self, target: &TorusGrid) -> Result<Self> {
        if target.n() != self.grid.n() {
            return Err(FieldError::DimensionMismatch(format!(
                "cannot resample n = {} onto n = {}",
                self.grid.n(),
                target.n()
            )));
        }
        let axes = self.grid.axes();
        let size = self.grid.size();
        let src = &self.grid;
        let values = target.map_points(|i| {
            let mut lo = [0usize; MAX_AXES];
            let mut frac = [0.0; MAX_AXES];
            for a in 0..axes {
                let u = target.coordinate(i, a) as f64 * size as f64 / target.size() as f64;
                let f = u.floor();
                lo[a] = f as usize % size;
                frac[a] = u - f;
            }
            let mut acc = 0.0;
            for corner in 0..1usize << axes {
                let mut w = 1.0;
                let mut idx = 0;
                for a in 0..axes {
                    let up = corner >> a & 1 == 1;
                    w *= if up { frac[a] } else { 1.0 - frac[a] };
                    let c = if up { (lo[a] + 1) % size } else { lo[a] };
                    idx += c * src.stride(a);
                }
                if w != 0.0 {
                    acc += w * self.values[idx];
                }
            }
            acc
        });
        Ok(Self {
            grid: target.clone(),
            values,
        })
    }

    /// `sup |self − other|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Nonnegative scalar field: a top-degree measure divided by `ω_X^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: TorusGrid,
    values: Vec<f64>,
}

/// Slack allowed below zero for fields that are supposed to be measures.
pub const MEASURE_NEG_TOL: f64 = 1e-9;

impl DensityField {
    /// Builds a density, rejecting values below `−MEASURE_NEG_TOL`.
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -MEASURE_NEG_TOL)
        {
            return Err(FieldError::NegativeDensity { index: i, value: *v });
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the sign check (signed Hessian densities).
    pub fn signed(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn<F>(grid: &TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = grid.map_points(|i| f(&grid.position(i)));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        slice_sum(&self.values) / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn as_function(&self) -> GridFunction {
        GridFunction::from_raw(self.grid.clone(), self.values.clone())
    }
}

fn check_values(grid: &TorusGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(FieldError::DimensionMismatch(format!(
            "{} values for a grid of {} points",
            values.len(),
            grid.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FieldError::NonFinite { index: i });
    }
    Ok(())
}

/// Field of Hermitian matrices representing a real (1,1)-form.
///
/// Per-point storage is packed as `n` real diagonal entries followed by
/// `(re, im)` of every upper off-diagonal entry in row order.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    grid: TorusGrid,
    storage: FormStorage,
}

#[derive(Clone, Debug, PartialEq)]
enum FormStorage {
    Uniform(HermitianMatrix),
    Packed(Vec<f64>),
}

pub(crate) fn packed_len(n: usize) -> usize {
    n * n
}

pub(crate) fn pack(m: &HermitianMatrix, out: &mut [f64]) {
    let n = m.dim();
    for i in 0..n {
        out[i] = m.get(i, i).re;
    }
    let mut p = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = m.get(i, j);
            out[p] = z.re;
            out[p + 1] = z.im;
            p += 2;
        }
    }
}

pub(crate) fn unpack(n: usize, data: &[f64]) -> HermitianMatrix {
    let mut m = HermitianMatrix::zeros(n);
    for i in 0..n {
        m.set_pair(i, i, Complex64::new(data[i], 0.0));
    }
    let mut p = n;
    for i in 0..n {
        for j in i + 1..n {
            m.set_pair(i, j, Complex64::new(data[p], data[p + 1]));
            p += 2;
        }
    }
    m
}

impl FormField {
    /// The same matrix at every point.
    pub fn uniform(grid: &TorusGrid, m: HermitianMatrix) -> Result<Self> {
        if m.dim() != grid.n() {
            return Err(FieldError::DimensionMismatch(format!(
                "matrix of dimension {} on a grid with n = {}",
                m.dim(),
                grid.n()
            )));
        }
        m.check_hermitian()?;
        Ok(Self {
            grid: grid.clone(),
            storage: FormStorage::Uniform(m),
        })
    }

    /// `ω_X`, the identity at every point.
    pub fn reference(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            storage: FormStorage::Uniform(HermitianMatrix::identity(grid.n())),
        }
    }

    pub fn from_matrices(grid: &TorusGrid, matrices: &[HermitianMatrix]) -> Result<Self> {
        if matrices.len() != grid.len() {
            return Err(FieldError::DimensionMismatch(format!(
                "{} matrices for a grid of {} points",
                matrices.len(),
                grid.len()
            )));
        }
        let n = grid.n();
        let pl = packed_len(n);
        let mut data = vec![0.0; pl * grid.len()];
        for (m, slot) in matrices.iter().zip(data.chunks_mut(pl)) {
            if m.dim() != n {
                return Err(FieldError::DimensionMismatch(format!(
                    "matrix of dimension {} on a grid with n = {n}",
                    m.dim()
                )));
            }
            m.check_hermitian()?;
            pack(m, slot);
        }
        Ok(Self {
            grid: grid.clone(),
            storage: FormStorage::Packed(data),
        })
    }

    /// Samples a matrix-valued function of position.
    pub fn from_fn<F>(grid: &TorusGrid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> HermitianMatrix + Sync,
    {
        let n = grid.n();
        let pl = packed_len(n);
        let mut data = vec![0.0; pl * grid.len()];
        data.par_chunks_mut(pl * CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                for (o, slot) in chunk.chunks_mut(pl).enumerate() {
                    let m = f(&grid.position(c * CHUNK + o));
                    pack(&m, slot);
                }
            });
        let field = Self {
            grid: grid.clone(),
            storage: FormStorage::Packed(data),
        };
        for i in 0..grid.len() {
            let m = field.at(i);
            if m.dim() != n {
                return Err(FieldError::DimensionMismatch("matrix dimension".into()));
            }
        }
        Ok(field)
    }

    pub(crate) fn from_packed(grid: TorusGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), packed_len(grid.n()) * grid.len());
        Self {
            grid,
            storage: FormStorage::Packed(data),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, idx: usize) -> HermitianMatrix {
        match &self.storage {
            FormStorage::Uniform(m) => *m,
            FormStorage::Packed(data) => {
                let pl = packed_len(self.grid.n());
                unpack(self.grid.n(), &data[idx * pl..(idx + 1) * pl])
            }
        }
    }

    pub(crate) fn packed_slice(&self) -> Option<&[f64]> {
        match &self.storage {
            FormStorage::Packed(d) => Some(d),
            FormStorage::Uniform(_) => None,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.storage, FormStorage::Uniform(_))
    }

    /// `self + t·ω_X`.
    pub fn shifted(&self, t: f64) -> Self {
        match &self.storage {
            FormStorage::Uniform(m) => Self {
                grid: self.grid.clone(),
                storage: FormStorage::Uniform(m.shifted(t)),
            },
            FormStorage::Packed(data) => {
                let n = self.grid.n();
                let pl = packed_len(n);
                let mut data = data.clone();
                for slot in data.chunks_mut(pl) {
                    for d in slot.iter_mut().take(n) {
                        *d += t;
                    }
                }
                Self {
                    grid: self.grid.clone(),
                    storage: FormStorage::Packed(data),
                }
            }
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        match &self.storage {
            FormStorage::Uniform(m) => Self {
                grid: self.grid.clone(),
                storage: FormStorage::Uniform(m.scaled(t)),
            },
            FormStorage::Packed(data) => Self {
                grid: self.grid.clone(),
                storage: FormStorage::Packed(data.iter().map(|v| t * v).collect()),
            },
        }
    }

    /// Pointwise sum of two forms on the same grid.
    pub fn add(&self, other: &FormField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if let (FormStorage::Uniform(a), FormStorage::Uniform(b)) = (&self.storage, &other.storage) {
            return Ok(Self {
                grid: self.grid.clone(),
                storage: FormStorage::Uniform(a.add(b)),
            });
        }
        let pl = packed_len(self.grid.n());
        let mut data = vec![0.0; pl * self.grid.len()];
        for (i, slot) in data.chunks_mut(pl).enumerate() {
            pack(&self.at(i).add(&other.at(i)), slot);
        }
        Ok(Self::from_packed(self.grid.clone(), data))
    }

    /// Packed per-point data (materialized for uniform fields).
    pub fn packed(&self) -> Vec<f64> {
        match &self.storage {
            FormStorage::Packed(d) => d.clone(),
            FormStorage::Uniform(m) => {
                let pl = packed_len(self.grid.n());
                let mut one = vec![0.0; pl];
                pack(m, &mut one);
                one.iter().copied().cycle().take(pl * self.grid.len()).collect()
            }
        }
    }

    /// Largest pointwise Hermitian defect (zero by construction of the storage).
    pub fn max_hermitian_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.at(i).hermitian_defect())
            .fold(0.0, f64::max)
    }
}
