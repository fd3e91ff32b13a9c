//! Radial reduction of the k-Hessian operator on balls in `ℂ^n`.
//!
//! A radial potential `u(z) = χ(ρ)`, `ρ = |z|²`, has `dd^c u` eigenvalues
//! `2χ′` (multiplicity `n − 1`) and `2(χ′ + ρχ″)`, so the normalized density
//! is `(2^k/n)·ρ^{1−n}·d/dρ[ρ^n (χ′)^k]`. Everything here works in
//! `t = log ρ`, where `χ′ = χ_t/ρ` and `χ′ + ρχ″ = χ_tt/ρ`.
//!
//! Finiteness of integrals near `ρ = 0` is decided from the tail of the
//! integrand: with `L = log(1/ρ)`, `log q(L) ≈ c − rL + α·log L` is fitted
//! far out, and the integral converges iff `r > 0`, or `r = 0` and `α < −1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("ρ-grid must be positive and strictly increasing (index {0})")]
    NonMonotoneGrid(usize),
    #[error("density ρ^-{a}·log^-{b} is not integrable against s^(n-1) near 0 (n = {n})")]
    NonIntegrableSource { a: f64, b: f64, n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, RadialError>;

/// `log(e^x + e^y)`.
fn log_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ℓ(t) = log(e + 1/ρ)` at `ρ = e^t`.
fn ell(t: f64) -> f64 {
    log_add(1.0, -t)
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss–Legendre on `[a, b]`.
fn gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let w = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for p in 0..pieces {
        let mid = a + (p as f64 + 0.5) * w;
        let mut s = 0.0;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += wt * f(mid + 0.5 * w * x);
        }
        acc += 0.5 * w * s;
    }
    acc
}

// ---------------------------------------------------------------------------
// Profiles and densities
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: usize,
    pub k: usize,
    /// Strictly increasing, ending at or below 1.
    pub rho: Vec<f64>,
    pub chi: Vec<f64>,
    /// `dχ/dt` (`t = log ρ`) when known in closed form; spares the density
    /// the second difference, which cancels badly at small `ρ`.
    #[serde(default)]
    pub chi_t: Option<Vec<f64>>,
}

/// `m` log-spaced points on `[rho_min, 1]`.
pub fn log_grid(rho_min: f64, m: usize) -> Result<Vec<f64>> {
    if !(rho_min > 0.0 && rho_min < 1.0) || m < 5 {
        return Err(RadialError::InvalidInput(format!(
            "need 0 < rho_min < 1 and at least 5 points (rho_min = {rho_min}, m = {m})"
        )));
    }
    let t0 = rho_min.ln();
    let h = -t0 / (m - 1) as f64;
    Ok((0..m)
        .map(|i| if i + 1 == m { 1.0 } else { (t0 + i as f64 * h).exp() })
        .collect())
}

fn check_degrees(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(RadialError::InvalidInput(format!("need 1 ≤ k ≤ n (n = {n}, k = {k})")));
    }
    Ok(())
}

impl RadialProfile {
    pub fn new(n: usize, k: usize, rho: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        check_degrees(n, k)?;
        if rho.len() != chi.len() || rho.len() < 5 {
            return Err(RadialError::InvalidInput("need ≥ 5 matching ρ and χ values".into()));
        }
        check_grid(&rho)?;
        Ok(Self { n, k, rho, chi, chi_t: None })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, k: usize, rho: Vec<f64>, chi: F) -> Result<Self> {
        let values = rho.iter().map(|&r| chi(r)).collect();
        Self::new(n, k, rho, values)
    }

    /// `max χ − min χ` over the grid.
    pub fn osc(&self) -> f64 {
        let max = self.chi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.chi.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn check_grid(rho: &[f64]) -> Result<()> {
    if rho[0] <= 0.0 || !rho[0].is_finite() {
        return Err(RadialError::NonMonotoneGrid(0));
    }
    match rho.windows(2).position(|w| !(w[1] > w[0])) {
        Some(i) => Err(RadialError::NonMonotoneGrid(i + 1)),
        None => Ok(()),
    }
}

/// Normalized σ_k density of the eigenvalues `(λ, …, λ, μ)` with `λ`
/// repeated `n − 1` times.
pub fn radial_eigen_density(n: usize, k: usize, lambda: f64, mu: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    (nf - kf) / nf * lambda.powi(k as i32) + kf / nf * lambda.powi(k as i32 - 1) * mu
}

/// First and second derivatives in `t` at every grid point: fourth order on
/// uniform `t`-spacing, second order otherwise.
fn t_derivatives(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = t.len();
    let h = (t[m - 1] - t[0]) / (m - 1) as f64;
    let uniform = t
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    if uniform {
        let (a, b) = (12.0 * h, 12.0 * h * h);
        // One-sided stencils for the first two points from either end.
        let edge = |s: f64, d1: &mut [f64], d2: &mut [f64], o: &dyn Fn(usize) -> f64| {
            d1[0] = s * (-25.0 * o(0) + 48.0 * o(1) - 36.0 * o(2) + 16.0 * o(3) - 3.0 * o(4)) / a;
            d1[1] = s * (-3.0 * o(0) - 10.0 * o(1) + 18.0 * o(2) - 6.0 * o(3) + o(4)) / a;
            d2[0] = (35.0 * o(0) - 104.0 * o(1) + 114.0 * o(2) - 56.0 * o(3) + 11.0 * o(4)) / b;
            d2[1] = (11.0 * o(0) - 20.0 * o(1) + 6.0 * o(2) + 4.0 * o(3) - o(4)) / b;
        };
        for i in 2..m - 2 {
            d1[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / a;
            d2[i] = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / b;
        }
        let (mut e1, mut e2) = ([0.0; 2], [0.0; 2]);
        edge(1.0, &mut d1[..2], &mut d2[..2], &|j| y[j]);
        edge(-1.0, &mut e1, &mut e2, &|j| y[m - 1 - j]);
        d1[m - 1] = e1[0];
        d1[m - 2] = e1[1];
        d2[m - 1] = e2[0];
        d2[m - 2] = e2[1];
    } else {
        for i in 0..m {
            let j = i.clamp(1, m - 2);
            let (h0, h1) = (t[j] - t[j - 1], t[j + 1] - t[j]);
            let (y0, y1, y2) = (y[j - 1], y[j], y[j + 1]);
            let second = 2.0 * (h0 * y2 - (h0 + h1) * y1 + h1 * y0) / (h0 * h1 * (h0 + h1));
            let first_mid = (h0 * h0 * (y2 - y1) + h1 * h1 * (y1 - y0)) / (h0 * h1 * (h0 + h1));
            d1[i] = first_mid + second * (t[i] - t[j]);
            d2[i] = second;
        }
    }
    (d1, d2)
}

/// Normalized `H_k(u)` of the radial potential on the profile's grid.
pub fn radial_hessian_density(profile: &RadialProfile) -> Result<Vec<f64>> {
    check_grid(&profile.rho)?;
    let t: Vec<f64> = profile.rho.iter().map(|r| r.ln()).collect();
    let (d1, d2) = match &profile.chi_t {
        Some(q) if q.len() == t.len() => (q.clone(), t_derivatives(&t, q).0),
        _ => t_derivatives(&t, &profile.chi),
    };
    Ok(profile
        .rho
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(r, (c1, c2))| radial_eigen_density(profile.n, profile.k, 2.0 * c1 / r, 2.0 * c2 / r))
        .collect())
}

// ---------------------------------------------------------------------------
// Density family and the exact first integral
// ---------------------------------------------------------------------------

/// `f(ρ) = ρ^{−a}·log(e + 1/ρ)^{−b}`; `δ` is the log-log margin of the
/// weighted functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialDensityFamily {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl RadialDensityFamily {
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(a >= 0.0) || !b.is_finite() || !delta.is_finite() {
            return Err(RadialError::InvalidInput(format!(
                "need a ≥ 0 and finite b, δ (a = {a}, b = {b}, δ = {delta})"
            )));
        }
        Ok(Self { a, b, delta })
    }

    pub fn constant() -> Self {
        Self { a: 0.0, b: 0.0, delta: 0.5 }
    }

    /// `log f` at `ρ = e^t`.
    pub fn ln_at(&self, t: f64) -> f64 {
        let lb = if self.b == 0.0 { 0.0 } else { self.b * ell(t).ln() };
        -self.a * t - lb
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.ln_at(rho.ln()).exp()
    }

    /// `log` of `ρ^{−n}·∫_0^ρ s^{n−1} f(s) ds` at `ρ = e^t`, from the
    /// substituted form `ρ^{−a}∫_0^∞ e^{−rτ} ℓ(t − τ)^{−b} dτ`, `r = n − a`.
    fn ln_mass_ratio(&self, n: usize, t: f64) -> f64 {
        let r = n as f64 - self.a;
        let g = |tau: f64| {
            let lb = if self.b == 0.0 { 0.0 } else { self.b * ell(t - tau).ln() };
            (-r * tau - lb).exp()
        };
        let tilde = if r > 0.0 {
            let span = 60.0 / r;
            gauss(g, 0.0, span, 120)
        } else {
            // r = 0 and b > 1: substitute τ = e^w − 1 and close with the
            // power tail ∫_T^∞ τ^{−b} dτ.
            let w_max = 40.0;
            let body = gauss(|w: f64| g(w.exp() - 1.0) * w.exp(), 0.0, w_max, 400);
            let t_max = w_max.exp() - 1.0;
            body + t_max.powf(1.0 - self.b) / (self.b - 1.0)
        };
        -self.a * t + tilde.ln()
    }

    fn check_integrable(&self, n: usize) -> Result<()> {
        let r = n as f64 - self.a;
        if r < 0.0 || (r == 0.0 && self.b <= 1.0) {
            return Err(RadialError::NonIntegrableSource { a: self.a, b: self.b, n });
        }
        Ok(())
    }
}

/// Tail fit `log q(L) ≈ c − rL + α·log L` at three far-out abscissae.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub rate: f64,
    pub power: f64,
}

const RATE_TOL: f64 = 1e-3;
const POWER_TOL: f64 = 1e-2;

impl TailFit {
    /// Exact interpolation of the model through three points `(L, log q)`.
    pub fn through(points: [(f64, f64); 3]) -> Self {
        let m = nalgebra::Matrix3::from_fn(|i, j| match j {
            0 => 1.0,
            1 => -points[i].0,
            _ => points[i].0.ln(),
        });
        let y = nalgebra::Vector3::new(points[0].1, points[1].1, points[2].1);
        let sol = m.lu().solve(&y).unwrap_or_else(|| nalgebra::Vector3::new(f64::NAN, 0.0, 0.0));
        Self { c: sol[0], rate: sol[1], power: sol[2] }
    }

    /// Does `∫^∞ q(L) dL` converge?
    pub fn integrable(&self) -> bool {
        if self.rate > RATE_TOL {
            return true;
        }
        self.rate.abs() <= RATE_TOL && self.power < -1.0 - POWER_TOL
    }

    /// `∫_{L0}^∞` of the model (power tails only; exponential tails are
    /// treated as exhausted).
    fn tail_from(&self, l0: f64) -> f64 {
        if self.rate > RATE_TOL || !self.integrable() {
            return 0.0;
        }
        self.c.exp() * l0.powf(self.power + 1.0) / (-self.power - 1.0)
    }
}

/// Far-out abscissae `L = log(1/ρ)` for tail fits: ρ = 1e−100, 1e−200, 1e−300.
pub const TAIL_DEPTHS: [f64; 3] = [230.258_509_299_404_6, 460.517_018_598_809_1, 690.775_527_898_213_7];

/// ρ_min values of the reported scans.
pub fn rho_min_scan() -> Vec<f64> {
    (2..=10).map(|e| 10f64.powi(-e)).collect()
}

/// Integral of `q(t)` over `t ∈ [−l_max, 0]` in the variable
/// `u = log(1 + L)`, which turns power tails into exponential ones.
fn integrate_tail<Q: Fn(f64) -> f64>(q: &Q, l_max: f64, pieces: usize) -> f64 {
    gauss(|u: f64| q(-(u.exp() - 1.0)) * u.exp(), 0.0, l_max.ln_1p(), pieces)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finiteness {
    /// Extrapolated integral over `(0, 1]` when finite.
    pub value: Option<f64>,
    /// `(ρ_min, ∫_{ρ_min}^1)` over the scan.
    pub partial: Vec<(f64, f64)>,
    pub fit: TailFit,
}

impl Finiteness {
    pub fn finite(&self) -> bool {
        self.value.is_some()
    }

    /// `log q` is given in `t`; `loglog` is a known slowly varying factor
    /// removed before fitting (it cannot change the decision unless
    /// `α = −1` exactly, where the integral diverges either way).
    fn decide<Q, G>(ln_q: Q, loglog: G) -> Self
    where
        Q: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let q = |t: f64| ln_q(t).exp();
        let partial: Vec<(f64, f64)> = rho_min_scan()
            .into_iter()
            .map(|r| (r, integrate_tail(&q, -r.ln(), 400)))
            .collect();
        let pts = TAIL_DEPTHS.map(|l| (l, ln_q(-l) - loglog(-l)));
        let fit = TailFit::through(pts);
        let value = fit.integrable().then(|| {
            let far = 1e8;
            let loglog_far = loglog(-far).exp();
            integrate_tail(&q, far, 2000) + loglog_far * fit.tail_from(far)
        });
        Self { value, partial, fit }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrability {
    pub lp: Vec<(f64, Finiteness)>,
    pub weighted: Finiteness,
}

/// `L^p` norms `∫ f^p s^{n−1} ds` and the weighted functional
/// `∫ f^{n/k}·A^n·B^{n+δ} s^{n−1} ds` on `(0, 1]`, with the regularized logs
/// `A = log(e + f)` (for `|log f|`) and `B = log(e + A)` (for `log|log f|`).
pub fn integrability_weight(
    f: &RadialDensityFamily,
    n: usize,
    k: usize,
    delta: f64,
    ps: &[f64],
) -> Result<Integrability> {
    check_degrees(n, k)?;
    if !(delta > 0.0) {
        return Err(RadialError::InvalidInput(format!("δ must be positive (δ = {delta})")));
    }
    let nf = n as f64;
    let lp = ps
        .iter()
        .map(|&p| {
            let fin = Finiteness::decide(|t| p * f.ln_at(t) + nf * t, |_| 0.0);
            (p, fin)
        })
        .collect();
    let ln_a = |t: f64| log_add(f.ln_at(t), 1.0);
    let ln_b = |t: f64| log_add(ln_a(t).ln(), 1.0).ln();
    let weighted = Finiteness::decide(
        |t| nf / k as f64 * f.ln_at(t) + nf * ln_a(t).ln() + (nf + delta) * ln_b(t) + nf * t,
        |t| (nf + delta) * ln_b(t),
    );
    Ok(Integrability { lp, weighted })
}

// ---------------------------------------------------------------------------
// Dirichlet solve
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub profile: RadialProfile,
    /// `χ′` on the grid, from the first integral.
    pub chi_prime: Vec<f64>,
    /// `(ρ_min, u(1) − u(ρ_min))` over the scan.
    pub osc_trace: Vec<(f64, f64)>,
    /// Fit of `χ′ρ` in `L = log(1/ρ)`; bounded oscillation iff integrable.
    pub tail: TailFit,
    /// `lim osc` when bounded.
    pub osc_limit: Option<f64>,
}

impl RadialSolution {
    pub fn bounded(&self) -> bool {
        self.osc_limit.is_some()
    }

    /// Growth exponent `γ` of `osc ~ L^γ` when unbounded (power tails).
    pub fn divergence_exponent(&self) -> f64 {
        self.tail.power + 1.0
    }
}

/// Solves `H_k(u) = f` on the ball with `u(1) = 0` by the exact first
/// integral `ρ^n (χ′)^k = (n/2^k) ∫_0^ρ s^{n−1} f(s) ds`.
pub fn radial_solve(
    f: &RadialDensityFamily,
    n: usize,
    k: usize,
    rho_min: f64,
    m: usize,
) -> Result<RadialSolution> {
    check_degrees(n, k)?;
    f.check_integrable(n)?;
    let rho = log_grid(rho_min, m)?;
    let scale = n as f64 / 2f64.powi(k as i32);
    let kinv = 1.0 / k as f64;
    let ln_chi_prime = |t: f64| kinv * (scale.ln() + f.ln_mass_ratio(n, t));
    let chi_prime_t = |t: f64| ln_chi_prime(t).exp();
    // q(t) = χ′ρ = dχ/dt
    let ln_q = |t: f64| ln_chi_prime(t) + t;
    let q = |t: f64| ln_q(t).exp();

    let t: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let mut chi = vec![0.0; m];
    for i in (0..m - 1).rev() {
        chi[i] = chi[i + 1] - gauss(q, t[i], t[i + 1], 1);
    }
    let chi_prime = t.iter().map(|&t| chi_prime_t(t)).collect();
    let chi_t = t.iter().map(|&t| q(t)).collect();

    let osc_trace = rho_min_scan()
        .into_iter()
        .map(|r| (r, integrate_tail(&q, -r.ln(), 200)))
        .collect();
    let tail = TailFit::through(TAIL_DEPTHS.map(|l| (l, ln_q(-l))));
    let osc_limit = tail
        .integrable()
        .then(|| integrate_tail(&q, 1e8, 1000) + tail.tail_from(1e8));
    Ok(RadialSolution {
        profile: RadialProfile { n, k, rho, chi, chi_t: Some(chi_t) },
        chi_prime,
        osc_trace,
        tail,
        osc_limit,
    })
}

// ---------------------------------------------------------------------------
// Threshold scan
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub p: f64,
    pub lp_finite: bool,
    pub weighted_finite: bool,
    pub osc_bounded: bool,
    /// Limit of the oscillation if bounded, else its growth exponent in
    /// `log(1/ρ_min)`.
    pub osc_limit_or_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<ThresholdRow>,
}

/// `(largest failing b, smallest passing b)` if the predicate switches once
/// along increasing `b`.
fn bracket(rows: &[&ThresholdRow], pred: impl Fn(&ThresholdRow) -> bool) -> Option<(f64, f64)> {
    let flags: Vec<bool> = rows.iter().map(|r| pred(r)).collect();
    let first = flags.iter().position(|&x| x)?;
    if first == 0 || flags[first..].iter().any(|&x| !x) {
        return None;
    }
    Some((rows[first - 1].b, rows[first].b))
}

impl ThresholdScan {
    fn at_delta(&self, delta: f64) -> Vec<&ThresholdRow> {
        let mut rows: Vec<_> = self.rows.iter().filter(|r| r.delta == delta).collect();
        rows.sort_by(|x, y| x.b.total_cmp(&y.b));
        rows
    }

    pub fn deltas(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.delta).collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }

    /// b-bracket where oscillation becomes bounded.
    pub fn osc_bracket(&self, delta: f64) -> Option<(f64, f64)> {
        bracket(&self.at_delta(delta), |r| r.osc_bounded)
    }

    /// b-bracket where the weighted functional becomes finite.
    pub fn weighted_bracket(&self, delta: f64) -> Option<(f64, f64)> {
        bracket(&self.at_delta(delta), |r| r.weighted_finite)
    }

    /// Every weighted-finite density has bounded oscillation.
    pub fn coherent(&self) -> bool {
        self.rows.iter().all(|r| !r.weighted_finite || r.osc_bounded)
    }
}

/// Scans `f = ρ^{−k} log(e + 1/ρ)^{−b}` over `bs` and `deltas`.
pub fn threshold_scan(
    n: usize,
    k: usize,
    bs: &[f64],
    deltas: &[f64],
    p: f64,
    rho_min: f64,
    m: usize,
) -> Result<ThresholdScan> {
    check_degrees(n, k)?;
    if k == n {
        return Err(RadialError::InvalidInput(
            "the family ρ^-k is not integrable against s^(n-1) when k = n".into(),
        ));
    }
    let a = k as f64;
    let mut rows = Vec::new();
    for &b in bs {
        let fam = RadialDensityFamily::new(a, b, deltas.first().copied().unwrap_or(0.5))?;
        let sol = radial_solve(&fam, n, k, rho_min, m)?;
        let osc_limit_or_rate = sol.osc_limit.unwrap_or_else(|| sol.divergence_exponent());
        for &delta in deltas {
            let integ = integrability_weight(&fam, n, k, delta, &[p])?;
            rows.push(ThresholdRow {
                a,
                b,
                delta,
                p,
                lp_finite: integ.lp[0].1.finite(),
                weighted_finite: integ.weighted.finite(),
                osc_bounded: sol.bounded(),
                osc_limit_or_rate,
            });
        }
    }
    Ok(ThresholdScan { n, k, rows })
}

/// Default b-grid: a coarse sweep below `k`, then points `±k/(4n)` either
/// side of both thresholds `k` and `k + k/n`, and `2k`. No point lands on a
/// threshold for any `n`.
pub fn default_b_grid(n: usize, k: usize) -> Vec<f64> {
    let kf = k as f64;
    let eps = kf / (4.0 * n as f64);
    let w = kf + kf / n as f64;
    vec![0.25 * kf, 0.5 * kf, 0.75 * kf, kf - eps, kf + eps, w - eps, w + eps, w + 2.0 * eps, 2.0 * kf]
}

/// Density at a point with `|z|² = ρ` from `χ′(ρ)` and `χ″(ρ)`.
pub fn radial_point_density(n: usize, k: usize, rho: f64, chi1: f64, chi2: f64) -> f64 {
    radial_eigen_density(n, k, 2.0 * chi1, 2.0 * (chi1 + rho * chi2))
}
