//! Damped Newton for the discrete equations
//!
//! * `H_k(φ) = e^{sφ} g` (exponential mode), and
//! * `H_k(φ) = c·f` with `sup φ = 0` (constant mode),
//!
//! where `H_k(φ)` is the normalized σ_k-density of `ω + dd^c φ`.
//!
//! Newton runs on `F = log H_k(φ) − log(rhs)`. Its Jacobian at a Γ_k iterate
//! is `v ↦ tr(W dd^c v) − s v` with `W = T_{k−1}/(C(n,k) H_k)`, which is
//! positive-definite inside the cone, so the linear solves are elliptic.
//! Linear systems are solved inexactly by Jacobi-preconditioned BiCGSTAB.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{binomial, relative_eigenvalues, sigma_with_transform, HermitianMatrix};
use crate::krylov::{bicgstab, KrylovSettings, LinearOperator};
use crate::torus::{
    local_form, map_local, neumaier_sum, packed_len, slice_sum, weighted_trace,
    weighted_trace_at, DensityField, FieldError, FormField, FormView, GridFunction, TorusGrid,
    CHUNK,
};

/// Values of `f` or `g` below this are raised to it before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-8;

/// Required Γ_k margin of `ω` itself before a solve starts.
pub const OMEGA_MARGIN_MIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("iterate left Γ_k at Newton step {iteration} (worst margin {margin:e})")]
    ConeExit { iteration: usize, margin: f64 },
    #[error("line search stalled at Newton step {iteration} with residual {residual:e}")]
    LineSearchStalled { iteration: usize, residual: f64 },
    #[error("no convergence after {iterations} Newton steps (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("density value {value:e} at index {index} is not positive")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("density has non-positive grid average {0:e}")]
    ZeroMass(f64),
    #[error("ω is not in Γ_k with margin ≥ {OMEGA_MARGIN_MIN:e} (worst {margin:e})")]
    OmegaNotInCone { margin: f64 },
    #[error("ω is not semi-positive (smallest eigenvalue {min_eigenvalue:e} at index {index})")]
    NotSemiPositive { index: usize, min_eigenvalue: f64 },
    #[error("continuation stage {stage} failed: {source}")]
    StageFailed {
        stage: usize,
        partial: Box<ContinuationOutcome>,
        #[source]
        source: Box<SolverError>,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveMode {
    Exponential { s: f64 },
    /// Unknown constant `c`, normalized by `sup φ = 0`.
    Constant,
}

#[derive(Clone, Debug)]
pub struct HessianProblem {
    pub k: usize,
    pub omega: FormField,
    pub density: DensityField,
    pub mode: SolveMode,
    /// Lebesgue exponent used when reporting norms of the density.
    pub p: f64,
}

impl HessianProblem {
    pub fn new(
        k: usize,
        omega: FormField,
        density: DensityField,
        mode: SolveMode,
        p: f64,
    ) -> Result<Self> {
        let n = omega.grid().n();
        if k == 0 || k > n {
            return Err(SolverError::InvalidProblem(format!(
                "degree k = {k} outside 1..={n}"
            )));
        }
        if omega.grid() != density.grid() {
            return Err(SolverError::InvalidProblem(
                "ω and density live on different grids".into(),
            ));
        }
        if let SolveMode::Exponential { s } = mode {
            if !(s > 0.0 && s.is_finite()) {
                return Err(SolverError::InvalidProblem(format!(
                    "exponential mode needs s > 0, got {s}"
                )));
            }
        }
        if !(p >= 1.0) {
            return Err(SolverError::InvalidProblem(format!("exponent p = {p} < 1")));
        }
        Ok(Self {
            k,
            omega,
            density,
            mode,
            p,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.omega.grid()
    }

    pub fn n(&self) -> usize {
        self.grid().n()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverSettings {
    /// Target for `sup |H_k(φ) − rhs|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of each linear solve.
    pub forcing: f64,
    pub krylov_max_iter: usize,
    pub density_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            forcing: 1e-2,
            krylov_max_iter: 2000,
            density_floor: DENSITY_FLOOR,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub phi: GridFunction,
    /// `c` in constant mode.
    pub constant: Option<f64>,
    /// `s` in exponential mode.
    pub s: Option<f64>,
    pub residual_sup: f64,
    pub residual_l1: f64,
    pub newton_iters: usize,
    pub krylov_iters: usize,
    /// Smallest Γ_k margin seen over all accepted iterates.
    pub cone_margin_min: f64,
    /// Smallest diagonal coefficient `(2/h²)·tr W + s` of the linearization
    /// over all iterates; positive means the linear solves were elliptic.
    pub ellipticity_min: f64,
    pub osc: f64,
    /// `sup |H_k(φ) − rhs|` before each Newton step, and at the end.
    pub trace: Vec<f64>,
    pub floored_points: usize,
    pub density_floor: f64,
}

/// `sup` and mean absolute deviation of `H_k(ω + dd^c φ) − target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    pub sup: f64,
    pub l1: f64,
}

pub fn residual(
    omega: &FormField,
    phi: &GridFunction,
    k: usize,
    target: &DensityField,
) -> Result<Residual> {
    let grid = phi.grid();
    if grid != omega.grid() || grid != target.grid() {
        return Err(SolverError::InvalidProblem("grid mismatch".into()));
    }
    let n = grid.n();
    if k == 0 || k > n {
        return Err(SolverError::InvalidProblem(format!("degree k = {k}")));
    }
    let ck = binomial(n, k);
    let values = phi.values();
    let t = target.values();
    let dev = map_local(omega, values, |i, a| (a.sigma_transform(k).0[k] / ck - t[i]).abs());
    Ok(Residual {
        sup: dev.iter().copied().fold(0.0, f64::max),
        l1: slice_sum(&dev) / grid.len() as f64,
    })
}

// ---------------------------------------------------------------------------
// Newton core

/// Everything that defines `F(φ, a) = log H_k(φ) − sφ − log g − a`.
pub(crate) struct Equation<'a> {
    pub omega: &'a FormField,
    pub k: usize,
    pub log_g: &'a [f64],
    pub s: f64,
    /// Constant mode: `a = log c` is an unknown and `φ` is kept mean-zero.
    pub bordered: bool,
}

/// Shift inside the logarithms: `F = log(H + ε) − log(rhs + ε)`. Roots are
/// unchanged; the residual is logarithmic where densities are large and
/// nearly linear where they are far below `ε`, so Newton steps no longer
/// chase densities below floating-point resolution.
pub(crate) const LOG_REG: f64 = 1e-6;

/// Margins within this distance of zero are treated as rounding noise by the
/// line search.
pub(crate) const MARGIN_NOISE: f64 = 1e-13;

/// `log(e^{x} + δ)` without overflow.
#[inline]
fn ln_plus_reg(x: f64, ln_reg: f64) -> f64 {
    if x > ln_reg {
        x + (ln_reg - x).exp().ln_1p()
    } else {
        ln_reg + (x - ln_reg).exp().ln_1p()
    }
}

#[derive(Clone, Copy, Debug)]
struct PassStats {
    residual_sup: f64,
    residual_sum: f64,
    norm_sq: f64,
    margin_min: f64,
    cone_ok: bool,
    ellipticity_min: f64,
}

impl PassStats {
    fn empty() -> Self {
        Self {
            residual_sup: 0.0,
            residual_sum: 0.0,
            norm_sq: 0.0,
            margin_min: f64::INFINITY,
            cone_ok: true,
            ellipticity_min: f64::INFINITY,
        }
    }

    fn merge(parts: &[PassStats]) -> Self {
        let mut out = Self::empty();
        for p in parts {
            out.residual_sup = out.residual_sup.max(p.residual_sup);
            out.margin_min = out.margin_min.min(p.margin_min);
            out.cone_ok &= p.cone_ok;
            out.ellipticity_min = out.ellipticity_min.min(p.ellipticity_min);
        }
        out.residual_sum = neumaier_sum(parts.iter().map(|p| p.residual_sum));
        out.norm_sq = neumaier_sum(parts.iter().map(|p| p.norm_sq));
        out
    }
}

/// Linearization data at one iterate: packed `W = T_{k−1}/(C(n,k)(H + δ))`
/// and the zeroth-order coefficient `s·rhs/(rhs + δ)` per point.
struct Linearization<'b> {
    w: &'b mut [f64],
    coef: &'b mut [f64],
}

impl<'a> Equation<'a> {
    fn grid(&self) -> &TorusGrid {
        self.omega.grid()
    }

    /// Evaluates `F` and the per-point margins, and optionally the
    /// linearization. With `old_margins`, also tests the line-search cone
    /// condition `margin ≥ 0.1·old − noise` at every point.
    fn pass(
        &self,
        values: &[f64],
        a: f64,
        f_out: &mut [f64],
        margins_out: &mut [f64],
        old_margins: Option<&[f64]>,
        lin: Option<Linearization<'_>>,
    ) -> PassStats {
        let grid = self.grid();
        let n = grid.n();
        let k = self.k;
        let pl = packed_len(n);
        let ck = binomial(n, k);
        let cj: Vec<f64> = (0..=k).map(|j| binomial(n, j)).collect();
        let ln_reg = LOG_REG.ln();
        let chunks = grid.len().div_ceil(CHUNK);

        let mut w_tmp = Vec::new();
        let mut c_tmp = Vec::new();
        let want = lin.is_some();
        let (w_out, c_out, w_stride, c_stride) = match lin {
            Some(l) => (l.w, l.coef, pl * CHUNK, CHUNK),
            None => {
                w_tmp.resize(chunks, 0.0);
                c_tmp.resize(chunks, 0.0);
                (&mut w_tmp[..], &mut c_tmp[..], 1, 1)
            }
        };

        let view = FormView::new(self.omega);
        let inv_h2 = grid.inv_h2();
        let parts: Vec<PassStats> = f_out
            .par_chunks_mut(CHUNK)
            .zip(margins_out.par_chunks_mut(CHUNK))
            .zip(w_out.par_chunks_mut(w_stride).zip(c_out.par_chunks_mut(c_stride)))
            .enumerate()
            .map(|(c, ((fc, mc), (wc, cc)))| {
                let mut st = PassStats::empty();
                let mut rsum = Vec::with_capacity(fc.len());
                let mut nsq = Vec::with_capacity(fc.len());
                let base = c * CHUNK;
                grid.walk(base, base + fc.len(), |i, off| {
                    let o = i - base;
                    let mut form = view.get(i);
                    form.add_hessian(values, i, off, inv_h2);
                    let (sig, t) = form.sigma_transform(k);
                    let margin = (1..=k)
                        .map(|j| sig[j] / cj[j])
                        .fold(f64::INFINITY, f64::min);
                    mc[o] = margin;
                    if let Some(old) = old_margins {
                        st.cone_ok &= margin >= MARGIN_KEEP * old[i] - MARGIN_NOISE;
                    }
                    st.margin_min = st.margin_min.min(margin);
                    let d = sig[k] / ck;
                    let log_rhs = self.s * values[i] + self.log_g[i] + a;
                    let r = (d - log_rhs.exp()).abs();
                    st.residual_sup = st.residual_sup.max(if r.is_nan() { f64::INFINITY } else { r });
                    rsum.push(r);
                    let dr = d + LOG_REG;
                    let f = if margin > -MARGIN_NOISE && dr > 0.0 {
                        dr.ln() - ln_plus_reg(log_rhs, ln_reg)
                    } else {
                        f64::INFINITY
                    };
                    fc[o] = f;
                    nsq.push(f * f);
                    if want {
                        let slot = &mut wc[o * pl..(o + 1) * pl];
                        let scale = 1.0 / (ck * dr);
                        t.pack_scaled(scale, slot);
                        let zeroth = self.s / (1.0 + (ln_reg - log_rhs).exp());
                        cc[o] = zeroth;
                        // tr T_{k−1} = (n − k + 1) σ_{k−1} > 0 on the cone.
                        let tr: f64 = slot[..n].iter().sum();
                        st.ellipticity_min = st.ellipticity_min.min(2.0 * inv_h2 * tr + zeroth);
                    }
                });
                st.residual_sum = neumaier_sum(rsum.into_iter());
                st.norm_sq = neumaier_sum(nsq.into_iter());
                st
            })
            .collect();
        PassStats::merge(&parts)
    }
}

/// Jacobian `v ↦ tr(W dd^c v) − c·v`, minus `mean(v)` when bordered.
struct Jacobian<'a> {
    grid: &'a TorusGrid,
    w: &'a [f64],
    coef: &'a [f64],
    bordered: bool,
}

impl LinearOperator for Jacobian<'_> {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.grid.n();
        let pl = packed_len(n);
        let inv_h2 = self.grid.inv_h2();
        let shift = if self.bordered {
            slice_sum(x) / x.len() as f64
        } else {
            0.0
        };
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, yc)| {
            let base = c * CHUNK;
            self.grid.walk(base, base + yc.len(), |i, off| {
                let jv = weighted_trace(n, x, i, off, inv_h2, &self.w[i * pl..(i + 1) * pl])
                    - self.coef[i] * x[i]
                    - shift;
                yc[i - base] = jv;
            });
        });
    }
}

pub(crate) struct NewtonOutcome {
    pub values: Vec<f64>,
    pub a: f64,
    pub iterations: usize,
    pub krylov_iters: usize,
    pub residual_sup: f64,
    pub residual_l1: f64,
    pub margin_min: f64,
    pub ellipticity_min: f64,
    pub trace: Vec<f64>,
}

const LINE_SEARCH_HALVINGS: usize = 30;
const MARGIN_KEEP: f64 = 0.1;
const ARMIJO: f64 = 1e-4;

pub(crate) fn newton(
    eq: &Equation<'_>,
    mut values: Vec<f64>,
    mut a: f64,
    settings: &SolverSettings,
) -> Result<NewtonOutcome> {
    let grid = eq.grid();
    let len = grid.len();
    let n = grid.n();
    let pl = packed_len(n);
    let inv_h2 = grid.inv_h2();

    if eq.bordered {
        let m = slice_sum(&values) / len as f64;
        values.par_iter_mut().for_each(|v| *v -= m);
    }

    let mut f = vec![0.0; len];
    let mut margins = vec![0.0; len];
    let mut w = vec![0.0; len * pl];
    let mut coef = vec![0.0; len];
    let mut cand = vec![0.0; len];
    let mut f_cand = vec![0.0; len];
    let mut m_cand = vec![0.0; len];
    let mut delta = vec![0.0; len];
    let mut scale = vec![0.0; len];

    let mut trace = Vec::new();
    let mut krylov_iters = 0;
    let mut margin_min = f64::INFINITY;
    let mut ellipticity_min = f64::INFINITY;

    let mut stats = eq.pass(
        &values,
        a,
        &mut f,
        &mut margins,
        None,
        Some(Linearization { w: &mut w, coef: &mut coef }),
    );
    if !(stats.margin_min > -MARGIN_NOISE) {
        return Err(SolverError::ConeExit {
            iteration: 0,
            margin: stats.margin_min,
        });
    }

    for iteration in 0..=settings.max_iter {
        trace.push(stats.residual_sup);
        margin_min = margin_min.min(stats.margin_min);
        ellipticity_min = ellipticity_min.min(stats.ellipticity_min);
        if !(stats.ellipticity_min > 0.0) {
            return Err(SolverError::ConeExit {
                iteration,
                margin: stats.margin_min,
            });
        }
        if stats.residual_sup <= settings.tol {
            return Ok(NewtonOutcome {
                values,
                a,
                iterations: iteration,
                krylov_iters,
                residual_sup: stats.residual_sup,
                residual_l1: stats.residual_sum / len as f64,
                margin_min,
                ellipticity_min,
                trace,
            });
        }
        if iteration == settings.max_iter {
            break;
        }

        // Jacobi-preconditioned linear solve J δ = −F.
        scale.par_iter_mut().enumerate().for_each(|(i, sc)| {
            let tr: f64 = w[i * pl..i * pl + n].iter().sum();
            *sc = 1.0 / (-2.0 * inv_h2 * tr - coef[i]);
        });
        f_cand.par_iter_mut().zip(f.par_iter()).for_each(|(r, f)| *r = -f);
        delta.iter_mut().for_each(|d| *d = 0.0);
        let op = Jacobian {
            grid,
            w: &w,
            coef: &coef,
            bordered: eq.bordered,
        };
        let out = bicgstab(
            &op,
            Some(&scale),
            &f_cand,
            &mut delta,
            KrylovSettings {
                rtol: settings.forcing,
                max_iter: settings.krylov_max_iter,
            },
        );
        krylov_iters += out.iterations;
        let delta_a = if eq.bordered {
            let m = slice_sum(&delta) / len as f64;
            delta.par_iter_mut().for_each(|d| *d -= m);
            m
        } else {
            0.0
        };

        // Cone-preserving backtracking with a sufficient-decrease test.
        let norm = stats.norm_sq.sqrt();
        let mut tau = 1.0;
        let mut accepted = None;
        let mut cone_failed = false;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            cand.par_iter_mut()
                .zip(values.par_iter().zip(delta.par_iter()))
                .for_each(|(c, (v, d))| *c = v + tau * d);
            let a_cand = a + tau * delta_a;
            let st = eq.pass(&cand, a_cand, &mut f_cand, &mut m_cand, Some(&margins), None);
            cone_failed = !st.cone_ok;
            if st.cone_ok && st.norm_sq.sqrt() <= (1.0 - ARMIJO * tau) * norm {
                accepted = Some(a_cand);
                break;
            }
            tau *= 0.5;
        }
        let Some(a_new) = accepted else {
            return Err(if cone_failed {
                SolverError::ConeExit {
                    iteration,
                    margin: stats.margin_min,
                }
            } else {
                SolverError::LineSearchStalled {
                    iteration,
                    residual: stats.residual_sup,
                }
            });
        };
        std::mem::swap(&mut values, &mut cand);
        a = a_new;
        stats = eq.pass(
            &values,
            a,
            &mut f,
            &mut margins,
            None,
            Some(Linearization { w: &mut w, coef: &mut coef }),
        );
    }
    Err(SolverError::MaxIterExceeded {
        iterations: settings.max_iter,
        residual: stats.residual_sup,
    })
}

// ---------------------------------------------------------------------------
// Public solvers

fn omega_margin(omega: &FormField, k: usize) -> f64 {
    let grid = omega.grid();
    let n = grid.n();
    let zeros = vec![0.0; grid.len()];
    let m = map_local(omega, &zeros, |_, a| {
        let s = a.sigma_transform(k).0;
        (1..=k)
            .map(|j| s[j] / binomial(n, j))
            .fold(f64::INFINITY, f64::min)
    });
    m.into_iter().fold(f64::INFINITY, f64::min)
}

/// Floors a density and returns `(log values, number of floored points)`.
fn floored_log(density: &DensityField, floor: f64) -> Result<(Vec<f64>, usize)> {
    let v = density.values();
    if let Some((index, &value)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(x.is_finite()) || **x < 0.0)
    {
        return Err(SolverError::NonPositiveDensity { index, value });
    }
    let floored = v.iter().filter(|&&x| x < floor).count();
    Ok((v.par_iter().map(|&x| x.max(floor).ln()).collect(), floored))
}

fn check_omega(prob: &HessianProblem) -> Result<()> {
    let m = omega_margin(&prob.omega, prob.k);
    if m < OMEGA_MARGIN_MIN {
        return Err(SolverError::OmegaNotInCone { margin: m });
    }
    Ok(())
}

/// Solves `H_k(φ) = e^{sφ} g` starting from `φ = 0`.
pub fn solve_exponential(prob: &HessianProblem, settings: &SolverSettings) -> Result<SolveReport> {
    let zero = GridFunction::constant(prob.grid(), 0.0);
    solve_exponential_from(prob, &zero, settings)
}

/// As [`solve_exponential`] with an explicit initial guess, which must lie
/// in Γ_k.
pub fn solve_exponential_from(
    prob: &HessianProblem,
    init: &GridFunction,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    let SolveMode::Exponential { s } = prob.mode else {
        return Err(SolverError::InvalidProblem(
            "solve_exponential needs exponential mode".into(),
        ));
    };
    if init.grid() != prob.grid() {
        return Err(SolverError::InvalidProblem("initial guess grid mismatch".into()));
    }
    check_omega(prob)?;
    let (log_g, floored) = floored_log(&prob.density, settings.density_floor)?;
    let report = exponential_log(&prob.omega, prob.k, &log_g, s, init.values().to_vec(), settings)?;
    Ok(SolveReport {
        floored_points: floored,
        ..report
    })
}

/// Exponential solve with the right-hand side given as `log g`, which lets
/// callers pass `g` far outside the floating-point range.
pub(crate) fn exponential_log(
    omega: &FormField,
    k: usize,
    log_g: &[f64],
    s: f64,
    init: Vec<f64>,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    let eq = Equation {
        omega,
        k,
        log_g,
        s,
        bordered: false,
    };
    let out = newton(&eq, init, 0.0, settings)?;
    let phi = GridFunction::new(omega.grid().clone(), out.values)?;
    Ok(SolveReport {
        osc: phi.osc(),
        phi,
        constant: None,
        s: Some(s),
        residual_sup: out.residual_sup,
        residual_l1: out.residual_l1,
        newton_iters: out.iterations,
        krylov_iters: out.krylov_iters,
        cone_margin_min: out.margin_min,
        ellipticity_min: out.ellipticity_min,
        trace: out.trace,
        floored_points: 0,
        density_floor: settings.density_floor,
    })
}

/// Solves `H_k(φ) = c·f`, `sup φ = 0`, starting from `φ = 0`.
pub fn solve_with_constant(prob: &HessianProblem, settings: &SolverSettings) -> Result<SolveReport> {
    let zero = GridFunction::constant(prob.grid(), 0.0);
    solve_with_constant_from(prob, &zero, None, settings)
}

/// Warm-started constant-mode solve; `c0` seeds the constant.
pub fn solve_with_constant_from(
    prob: &HessianProblem,
    init: &GridFunction,
    c0: Option<f64>,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    if prob.mode != SolveMode::Constant {
        return Err(SolverError::InvalidProblem(
            "solve_with_constant needs constant mode".into(),
        ));
    }
    if init.grid() != prob.grid() {
        return Err(SolverError::InvalidProblem("initial guess grid mismatch".into()));
    }
    let mass = prob.density.mean();
    if !(mass > 0.0) {
        return Err(SolverError::ZeroMass(mass));
    }
    check_omega(prob)?;
    let (log_f, floored) = floored_log(&prob.density, settings.density_floor)?;
    let grid = prob.grid();
    let a0 = match c0 {
        Some(c) if c > 0.0 => c.ln(),
        _ => {
            // Match total masses: mean H_k(φ0) = c · mean f.
            let ck = binomial(grid.n(), prob.k);
            let values = init.values();
            let m = grid.sum_points(|i| {
                sigma_with_transform(&local_form(&prob.omega, values, i), prob.k).0[prob.k] / ck
            }) / grid.len() as f64;
            (m / mass).ln()
        }
    };
    let eq = Equation {
        omega: &prob.omega,
        k: prob.k,
        log_g: &log_f,
        s: 0.0,
        bordered: true,
    };
    let out = match newton(&eq, init.values().to_vec(), a0, settings) {
        Ok(out) => out,
        Err(
            first @ (SolverError::ConeExit { .. }
            | SolverError::LineSearchStalled { .. }
            | SolverError::MaxIterExceeded { .. }),
        ) => {
            // Fall back to the penalized route: H_k(φ_s) = e^{sφ_s} f for
            // decreasing s, whose limit gives a = lim s·mean φ_s.
            let mut warm = init.values().to_vec();
            let mut a = a0;
            for s in [1.0, 0.1, 0.01, 0.001] {
                let shifted: Vec<f64> = log_f.iter().map(|l| l + a).collect();
                let Ok(rep) = exponential_log(&prob.omega, prob.k, &shifted, s, warm.clone(), settings)
                else {
                    return Err(first);
                };
                warm = rep.phi.into_values();
            }
            let m = slice_sum(&warm) / warm.len() as f64;
            a += 0.001 * m;
            newton(&eq, warm, a, settings)?
        }
        Err(e) => return Err(e),
    };
    let max = out.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi = GridFunction::new(grid.clone(), out.values.iter().map(|v| v - max).collect())?;
    Ok(SolveReport {
        osc: phi.osc(),
        phi,
        constant: Some(out.a.exp()),
        s: None,
        residual_sup: out.residual_sup,
        residual_l1: out.residual_l1,
        newton_iters: out.iterations,
        krylov_iters: out.krylov_iters,
        cone_margin_min: out.margin_min,
        ellipticity_min: out.ellipticity_min,
        trace: out.trace,
        floored_points: floored,
        density_floor: settings.density_floor,
    })
}

// ---------------------------------------------------------------------------
// Continuation in the reference form

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub j: usize,
    pub c: f64,
    pub osc: f64,
    pub residual: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationSchedule {
    pub j_max: usize,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug)]
pub struct ContinuationOutcome {
    pub schedule: ContinuationSchedule,
    pub reports: Vec<SolveReport>,
    pub warnings: Vec<String>,
}

/// `ω_j = ω_0 + 2^{−j} ω_X`.
pub fn continuation_form(omega0: &FormField, j: usize) -> FormField {
    omega0.shifted(0.5f64.powi(j as i32))
}

fn check_semi_positive(omega: &FormField) -> Result<()> {
    let grid = omega.grid();
    let id = HermitianMatrix::identity(grid.n());
    let idx: Vec<usize> = if omega.is_uniform() {
        vec![0]
    } else {
        (0..grid.len()).collect()
    };
    for i in idx {
        let a = omega.at(i);
        let lam = relative_eigenvalues(&a, &id).map_err(FieldError::from)?;
        let scale = 1.0 + a.norm();
        if lam[0] < -1e-12 * scale {
            return Err(SolverError::NotSemiPositive {
                index: i,
                min_eigenvalue: lam[0],
            });
        }
    }
    Ok(())
}

/// Solves the constant-mode problem for `ω_j`, `j = 0..=j_max`, warm-starting
/// each stage from the previous one. `prob.omega` is the semi-positive `ω_0`.
pub fn continuation_degenerate(
    prob: &HessianProblem,
    j_max: usize,
    settings: &SolverSettings,
) -> Result<ContinuationOutcome> {
    if prob.mode != SolveMode::Constant {
        return Err(SolverError::InvalidProblem(
            "continuation runs in constant mode".into(),
        ));
    }
    check_semi_positive(&prob.omega)?;
    let mut warnings = Vec::new();
    let ratio = prob.n() as f64 / prob.k as f64;
    if prob.p <= ratio {
        warnings.push(format!(
            "p = {} does not exceed n/k = {ratio}; oscillation bounds are not expected",
            prob.p
        ));
    }
    let mut outcome = ContinuationOutcome {
        schedule: ContinuationSchedule {
            j_max,
            stages: Vec::new(),
        },
        reports: Vec::new(),
        warnings,
    };
    let mut warm = GridFunction::constant(prob.grid(), 0.0);
    let mut c_prev = None;
    for j in 0..=j_max {
        let stage = HessianProblem {
            omega: continuation_form(&prob.omega, j),
            ..prob.clone()
        };
        match solve_with_constant_from(&stage, &warm, c_prev, settings) {
            Ok(rep) => {
                outcome.schedule.stages.push(StageRecord {
                    j,
                    c: rep.constant.unwrap_or(f64::NAN),
                    osc: rep.osc,
                    residual: rep.residual_sup,
                    newton_iters: rep.newton_iters,
                });
                warm = rep.phi.clone();
                c_prev = rep.constant;
                outcome.reports.push(rep);
            }
            Err(e) => {
                return Err(SolverError::StageFailed {
                    stage: j,
                    partial: Box::new(outcome),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Linearization check

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizationCheck {
    /// `sup |analytic − finite difference| / sup |analytic|`.
    pub relative_error: f64,
    pub analytic_sup: f64,
}

/// Compares `d/dt H_k(φ + t v)|_{t=0}`, computed from the Newton transform,
/// with a central difference of step `step`.
pub fn linearization_check(
    omega: &FormField,
    phi: &GridFunction,
    direction: &GridFunction,
    k: usize,
    step: f64,
) -> Result<LinearizationCheck> {
    let grid = phi.grid();
    if grid != omega.grid() || grid != direction.grid() {
        return Err(SolverError::InvalidProblem("grid mismatch".into()));
    }
    let n = grid.n();
    if k == 0 || k > n {
        return Err(SolverError::InvalidProblem(format!("degree k = {k}")));
    }
    let ck = binomial(n, k);
    let pl = packed_len(n);
    let (p, v) = (phi.values(), direction.values());
    let plus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + step * b).collect();
    let minus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - step * b).collect();
    let pairs = grid.map_points(|i| {
        let (_, t) = sigma_with_transform(&local_form(omega, p, i), k);
        let mut w = vec![0.0; pl];
        crate::torus::pack(&t, &mut w);
        let analytic = weighted_trace_at(grid, v, i, &w) / ck;
        let hp = sigma_with_transform(&local_form(omega, &plus, i), k).0[k] / ck;
        let hm = sigma_with_transform(&local_form(omega, &minus, i), k).0[k] / ck;
        (analytic, (hp - hm) / (2.0 * step))
    });
    let analytic_sup = pairs.iter().map(|(a, _)| a.abs()).fold(0.0, f64::max);
    let diff = pairs.iter().map(|(a, f)| (a - f).abs()).fold(0.0, f64::max);
    Ok(LinearizationCheck {
        relative_error: diff / analytic_sup,
        analytic_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::hessian_measure;
    use std::f64::consts::PI;

    fn grid(n: usize, size: usize) -> TorusGrid {
        TorusGrid::new(n, size).unwrap()
    }

    #[test]
    fn reference_problem_is_solved_by_zero() {
        let g = grid(2, 6);
        let prob = HessianProblem::new(
            2,
            FormField::reference(&g),
            DensityField::constant(&g, 1.0),
            SolveMode::Exponential { s: 1.0 },
            2.0,
        )
        .unwrap();
        let rep = solve_exponential(&prob, &SolverSettings::default()).unwrap();
        assert_eq!(rep.newton_iters, 0);
        assert!(rep.phi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_shift() {
        let g = grid(2, 6);
        let (s, c0) = (2.0f64, 0.3f64);
        let prob = HessianProblem::new(
            2,
            FormField::reference(&g),
            DensityField::constant(&g, (-s * c0).exp()),
            SolveMode::Exponential { s },
            2.0,
        )
        .unwrap();
        let rep = solve_exponential(&prob, &SolverSettings::default()).unwrap();
        assert!(rep.phi.values().iter().all(|v| (v - c0).abs() < 1e-9));
    }

    #[test]
    fn manufactured_exponential() {
        let g = grid(2, 8);
        let om = FormField::reference(&g);
        let s = 1.0;
        let star = GridFunction::from_fn(&g, |x| {
            0.02 * (2.0 * PI * x[0]).sin() + 0.01 * (2.0 * PI * (x[1] + x[2])).cos()
        });
        let h = hessian_measure(&om, &star, 2).unwrap().density;
        let target = DensityField::new(
            g.clone(),
            h.values()
                .iter()
                .zip(star.values())
                .map(|(d, p)| d * (-s * p).exp())
                .collect(),
        )
        .unwrap();
        let prob =
            HessianProblem::new(2, om, target, SolveMode::Exponential { s }, 2.0).unwrap();
        let settings = SolverSettings::default();
        let rep = solve_exponential(&prob, &settings).unwrap();
        assert!(rep.residual_sup <= settings.tol);
        assert!(rep.phi.sup_distance(&star).unwrap() <= 10.0 * settings.tol);
        assert!(rep.cone_margin_min > 0.0 && rep.ellipticity_min > 0.0);
    }

    #[test]
    fn constant_mode_scaling() {
        let g = grid(2, 8);
        let om = FormField::reference(&g);
        let f = DensityField::from_fn(&g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin());
        let settings = SolverSettings::default();
        let prob = HessianProblem::new(2, om.clone(), f.clone(), SolveMode::Constant, 2.0).unwrap();
        let rep = solve_with_constant(&prob, &settings).unwrap();
        assert_eq!(rep.phi.max(), 0.0);
        assert!(rep.residual_sup <= settings.tol);
        let prob2 = HessianProblem::new(2, om, f.scale(3.0), SolveMode::Constant, 2.0).unwrap();
        let rep2 = solve_with_constant(&prob2, &settings).unwrap();
        let (c, c2) = (rep.constant.unwrap(), rep2.constant.unwrap());
        assert!((c2 - c / 3.0).abs() <= 10.0 * settings.tol);
        assert!(rep.phi.sup_distance(&rep2.phi).unwrap() <= 10.0 * settings.tol);
    }

    #[test]
    fn zero_mass_is_rejected() {
        let g = grid(1, 4);
        let prob = HessianProblem::new(
            1,
            FormField::reference(&g),
            DensityField::constant(&g, 0.0),
            SolveMode::Constant,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            solve_with_constant(&prob, &SolverSettings::default()),
            Err(SolverError::ZeroMass(_))
        ));
    }

    #[test]
    fn linearization_matches_differences() {
        let g = grid(3, 4);
        let om = FormField::reference(&g);
        let phi = GridFunction::from_fn(&g, |x| 0.01 * (2.0 * PI * (x[0] + x[3])).sin());
        let v = GridFunction::from_fn(&g, |x| (2.0 * PI * (x[1] - x[4])).cos());
        for k in 1..=3 {
            let chk = linearization_check(&om, &phi, &v, k, 1e-5).unwrap();
            assert!(chk.relative_error <= 1e-4, "k={k}: {chk:?}");
        }
    }
}
