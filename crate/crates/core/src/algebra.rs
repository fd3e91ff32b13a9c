//! Pointwise linear algebra for (1,1)-forms.
//!
//! A real (1,1)-form `α = i Σ A_jk dz_j ∧ dz̄_k` is stored as its Hermitian
//! coefficient matrix. Everything in this module is relative to a reference
//! hermitian metric `G` (the torus code always uses `G = Id`): the relative
//! eigenvalues solve `det(A − λG) = 0`, and `α^j ∧ G^{n−j} / G^n` equals
//! `σ_j(λ) / C(n, j)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 4;

const HERMITIAN_RTOL: f64 = 1e-12;
const METRIC_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NonHermitianInput(f64),
    #[error("reference metric is not positive definite (smallest eigenvalue {0:e})")]
    NonPositiveMetric(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree k = {k} outside 1..={n}")]
    InvalidDegree { k: usize, n: usize },
    #[error("argument {index} is outside the Γ_k cone (worst margin {margin:e})")]
    ConeViolation { index: usize, margin: f64 },
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Hermitian `n × n` matrix with `n ≤ 4`, stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self {
            dim,
            data: [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i][i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-Hermitian input.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = entries[i * dim + j];
            }
        }
        m.check_hermitian()?;
        // Symmetrize exactly so downstream code can rely on it.
        for i in 0..dim {
            m.data[i][i].im = 0.0;
            for j in i + 1..dim {
                m.data[j][i] = m.data[i][j].conj();
            }
        }
        Ok(m)
    }

    /// Builds from a dense nalgebra matrix (must be square and Hermitian).
    pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(AlgebraError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n = m.nrows();
        let entries: Vec<Complex64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Self::from_rows(n, &entries)
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.data[i][j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i][j]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`.
    #[inline]
    pub fn set_pair(&mut self, i: usize, j: usize, z: Complex64) {
        if i == j {
            self.data[i][i] = Complex64::new(z.re, 0.0);
        } else {
            self.data[i][j] = z;
            self.data[j][i] = z.conj();
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i].re).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut m = *self;
        for row in m.data.iter_mut().take(self.dim) {
            for z in row.iter_mut().take(self.dim) {
                *z *= t;
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[i][j] += other.data[i][j];
            }
        }
        m
    }

    /// `self + t · Id`.
    pub fn shifted(&self, t: f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            m.data[i][i].re += t;
        }
        m
    }

    /// Congruence `M* A M`.
    pub fn congruence(&self, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        let out = m.adjoint() * self.to_dmatrix() * m;
        let n = self.dim;
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.data[i][i] = Complex64::new(out[(i, i)].re, 0.0);
            for j in i + 1..n {
                let z = 0.5 * (out[(i, j)] + out[(j, i)].conj());
                h.data[i][j] = z;
                h.data[j][i] = z.conj();
            }
        }
        Ok(h)
    }

    /// Largest entrywise deviation from Hermitian symmetry, relative to the
    /// largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut scale: f64 = 0.0;
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(self.data[i][j].norm());
                defect = defect.max((self.data[i][j] - self.data[j][i].conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let d = self.hermitian_defect();
        if d > HERMITIAN_RTOL {
            Err(AlgebraError::NonHermitianInput(d))
        } else {
            Ok(())
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.data[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    #[inline]
    fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
        for (i, row) in out.iter_mut().enumerate().take(n) {
            for (j, z) in row.iter_mut().enumerate().take(n) {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += self.data[i][l] * other.data[l][j];
                }
                *z = acc;
            }
        }
        Self { dim: n, data: out }
    }

    #[inline]
    fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for l in 0..n {
                acc += (self.data[i][l] * other.data[l][i]).re;
            }
        }
        acc
    }
}

/// Elementary symmetric polynomials `(σ_0, …, σ_n)` of an eigenvalue vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaValues {
    values: Vec<f64>,
}

impl SigmaValues {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Length of the underlying eigenvalue vector.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `σ_j / C(n, j)`.
    pub fn normalized(&self, j: usize) -> f64 {
        self.values[j] / binomial(self.n(), j)
    }
}

/// Γ_k membership certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeCertificate {
    pub member: bool,
    /// `σ_j / C(n, j)` for `j = 1..=k`.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
}

impl ConeCertificate {
    fn from_margins(margins: Vec<f64>) -> Self {
        let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            member: margins.iter().all(|&m| m > 0.0),
            margins,
            worst_margin,
        }
    }
}

fn check_degree(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(AlgebraError::InvalidDegree { k, n })
    } else {
        Ok(())
    }
}

/// Solves `det(A − λG) = 0` for Hermitian `A` and positive-definite `G`.
///
/// `G = L L*` is factored and the eigenvalues of `L⁻¹ A L⁻*` are returned in
/// ascending order.
pub fn relative_eigenvalues(a: &HermitianMatrix, g: &HermitianMatrix) -> Result<Vec<f64>> {
    if a.dim() != g.dim() {
        return Err(AlgebraError::DimensionMismatch {
            expected: g.dim(),
            got: a.dim(),
        });
    }
    a.check_hermitian()?;
    g.check_hermitian()?;

    let g_eigs = SymmetricEigen::new(g.to_dmatrix()).eigenvalues;
    let g_min = g_eigs.iter().copied().fold(f64::INFINITY, f64::min);
    if !(g_min > METRIC_FLOOR) {
        return Err(AlgebraError::NonPositiveMetric(g_min));
    }
    let chol = g
        .to_dmatrix()
        .cholesky()
        .ok_or(AlgebraError::NonPositiveMetric(g_min))?;
    let l = chol.l();
    // C = L⁻¹ A L⁻*
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(AlgebraError::NonPositiveMetric(g_min))?;
    let mut c = &linv * a.to_dmatrix() * linv.adjoint();
    // Restore exact Hermitian symmetry lost to rounding.
    let n = c.nrows();
    for i in 0..n {
        c[(i, i)].im = 0.0;
        for j in i + 1..n {
            let z = 0.5 * (c[(i, j)] + c[(j, i)].conj());
            c[(i, j)] = z;
            c[(j, i)] = z.conj();
        }
    }
    let mut eigs: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    Ok(eigs)
}

/// Elementary symmetric polynomials of `lambda` by the product recursion
/// `Π (1 + λ_i t)`.
pub fn sigma(lambda: &[f64]) -> SigmaValues {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    SigmaValues { values: e }
}

/// Like [`sigma`], but checks the expected length.
pub fn sigma_checked(lambda: &[f64], n: usize) -> Result<SigmaValues> {
    if lambda.len() != n {
        return Err(AlgebraError::DimensionMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    Ok(sigma(lambda))
}

/// `α^k ∧ G^{n−k} / G^n = σ_k(λ(A, G)) / C(n, k)`.
pub fn hessian_density(a: &HermitianMatrix, g: &HermitianMatrix, k: usize) -> Result<f64> {
    check_degree(k, a.dim())?;
    let lambda = relative_eigenvalues(a, g)?;
    Ok(sigma(&lambda).normalized(k))
}

/// Polarized value `α_1 ∧ … ∧ α_k ∧ G^{n−k} / G^n`.
///
/// Evaluated by inclusion–exclusion over the nonempty subsets `S` of the
/// arguments: `(1/k!) Σ_S (−1)^{k−|S|} σ_k(Σ_{i∈S} A_i)`.
pub fn mixed_hessian_density(forms: &[HermitianMatrix], g: &HermitianMatrix) -> Result<f64> {
    let k = forms.len();
    let n = g.dim();
    check_degree(k, n)?;
    for f in forms {
        if f.dim() != n {
            return Err(AlgebraError::DimensionMismatch {
                expected: n,
                got: f.dim(),
            });
        }
    }
    let mut total = 0.0;
    for mask in 1u32..(1u32 << k) {
        let mut sum = HermitianMatrix::zeros(n);
        for (i, f) in forms.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = sum.add(f);
            }
        }
        let size = mask.count_ones() as usize;
        let sign = if (k - size) % 2 == 0 { 1.0 } else { -1.0 };
        let lambda = relative_eigenvalues(&sum, g)?;
        total += sign * sigma(&lambda).get(k);
    }
    let k_factorial: f64 = (1..=k).map(|i| i as f64).product();
    Ok(total / k_factorial / binomial(n, k))
}

/// Γ_k(G) membership with the raw normalized margins.
pub fn in_gamma_k(a: &HermitianMatrix, g: &HermitianMatrix, k: usize) -> Result<ConeCertificate> {
    check_degree(k, a.dim())?;
    let lambda = relative_eigenvalues(a, g)?;
    let s = sigma(&lambda);
    Ok(ConeCertificate::from_margins(
        (1..=k).map(|j| s.normalized(j)).collect(),
    ))
}

/// Gårding gap `mixed(A_1, …, A_k) − Π hessian_density(A_i)^{1/k}`.
pub fn garding_gap(forms: &[HermitianMatrix], g: &HermitianMatrix) -> Result<f64> {
    let k = forms.len();
    let mut geo = 1.0;
    for (index, f) in forms.iter().enumerate() {
        let cert = in_gamma_k(f, g, k)?;
        if !cert.member {
            return Err(AlgebraError::ConeViolation {
                index,
                margin: cert.worst_margin,
            });
        }
        geo *= cert.margins[k - 1].powf(1.0 / k as f64);
    }
    Ok(mixed_hessian_density(forms, g)? - geo)
}

/// Exact boundary shift of Γ_k along the direction `(1, …, 1)`.
///
/// Returns the largest real root `t*` of `t ↦ σ_k(λ + t·1)`, so that
/// `λ + t·1 ∈ Γ_k` exactly when `t > t*`. The input is the vector
/// `(σ_0, …, σ_n)` of the eigenvalues (its length fixes `n`), which keeps
/// the routine usable without an eigen-decomposition.
pub fn cone_entry_shift(sigmas: &[f64], k: usize) -> f64 {
    let n = sigmas.len() - 1;
    // σ_k(λ + t·1) = Σ_{i=0}^{k} C(n−i, k−i) σ_i(λ) t^{k−i}
    let coeffs: Vec<f64> = (0..=k)
        .map(|i| binomial(n - i, k - i) * sigmas[i])
        .collect();
    let eval = |t: f64| -> (f64, f64) {
        // Horner on the polynomial in t of degree k; coefficient of t^{k−i} is coeffs[i].
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in &coeffs {
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp)
    };
    if k == 1 {
        return -sigmas[1] / n as f64;
    }
    // Every root is ≥ −λ_max ≥ … and ≤ −λ_min; |λ_i| ≤ sqrt(σ_1² − 2σ_2) = ‖λ‖₂.
    let norm = (sigmas[1] * sigmas[1] - 2.0 * sigmas[2]).max(0.0).sqrt();
    let mut t = norm + 1.0;
    for _ in 0..200 {
        let (p, dp) = eval(t);
        if dp <= 0.0 || !p.is_finite() {
            break;
        }
        let step = p / dp;
        let next = t - step;
        if !(next < t) {
            break;
        }
        t = next;
        if step.abs() <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    t
}

/// Boundary shift of Γ_k(G) along `G`: `A + tG ∈ Γ_k(G)` exactly when `t`
/// exceeds the returned value.
pub fn cone_shift_relative(a: &HermitianMatrix, g: &HermitianMatrix, k: usize) -> Result<f64> {
    check_degree(k, a.dim())?;
    let lambda = relative_eigenvalues(a, g)?;
    Ok(cone_entry_shift(sigma(&lambda).values(), k))
}

/// `σ_0..=σ_k` of `A` relative to the identity together with the Newton
/// transform `T_{k−1}(A)`, which satisfies `dσ_k(A)[B] = tr(T_{k−1} B)`.
///
/// Uses the recursion `T_0 = I`, `σ_{j+1} = tr(A T_j)/(j+1)`,
/// `T_{j+1} = σ_{j+1} I − A T_j`. For Hermitian `A` the σ_j agree with the
/// eigenvalue route.
pub fn sigma_with_transform(a: &HermitianMatrix, k: usize) -> ([f64; MAX_DIM + 1], HermitianMatrix) {
    let n = a.dim();
    let mut s = [0.0; MAX_DIM + 1];
    s[0] = 1.0;
    let mut t = HermitianMatrix::identity(n);
    for j in 0..k {
        s[j + 1] = a.trace_product(&t) / (j + 1) as f64;
        if j + 1 < k {
            let at = a.mul(&t);
            let mut next = at.scaled(-1.0);
            for i in 0..n {
                next.data[i][i].re += s[j + 1];
            }
            t = next;
        }
    }
    // T_{k−1} is a polynomial in A and therefore Hermitian; clean rounding.
    for i in 0..n {
        t.data[i][i].im = 0.0;
        for j in i + 1..n {
            let z = 0.5 * (t.data[i][j] + t.data[j][i].conj());
            t.data[i][j] = z;
            t.data[j][i] = z.conj();
        }
    }
    (s, t)
}

/// All of `σ_0..=σ_n` of `A` relative to the identity, without eigenvalues.
pub fn sigma_identity(a: &HermitianMatrix) -> [f64; MAX_DIM + 1] {
    sigma_with_transform(a, a.dim()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn subset_sigma(lambda: &[f64], j: usize) -> f64 {
        let n = lambda.len();
        (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == j)
            .map(|m| {
                (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| lambda[i])
                    .product::<f64>()
            })
            .sum()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            m.set_pair(i, i, c(rng.gen_range(-1.0..1.0), 0.0));
            for j in i + 1..n {
                m.set_pair(i, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let id = HermitianMatrix::identity(3);
        let l = relative_eigenvalues(&id, &id).unwrap();
        for x in l {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_generalized_eigenvalues() {
        let a = HermitianMatrix::from_diag(&[2.0, 4.0]);
        let g = HermitianMatrix::from_diag(&[1.0, 2.0]);
        let l = relative_eigenvalues(&a, &g).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn self_relative_eigenvalues_are_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_hermitian(&mut rng, 4);
        let g = b.mul(&b).shifted(0.5);
        let g = HermitianMatrix::from_dmatrix(&g.to_dmatrix()).unwrap();
        for x in relative_eigenvalues(&g, &g).unwrap() {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)];
        assert!(matches!(
            HermitianMatrix::from_rows(2, &bad),
            Err(AlgebraError::NonHermitianInput(_))
        ));
        let id = HermitianMatrix::identity(2);
        let neg = HermitianMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            relative_eigenvalues(&id, &neg),
            Err(AlgebraError::NonPositiveMetric(_))
        ));
        let id3 = HermitianMatrix::identity(3);
        assert!(matches!(
            relative_eigenvalues(&id, &id3),
            Err(AlgebraError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            sigma_checked(&[1.0, 2.0], 3),
            Err(AlgebraError::DimensionMismatch { .. })
        ));
        assert!(hessian_density(&id, &id, 3).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&[1.0, 1.0, 1.0]).values(), &[1.0, 3.0, 3.0, 1.0]);
        let s = sigma(&[3.0, 1.0, -0.5]);
        let expected = [1.0, 3.5, 1.0, -1.5];
        for (a, b) in s.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(sigma(&[2.0, 2.0, 2.0]).get(2), 12.0);
    }

    #[test]
    fn sigma_matches_subset_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.gen_range(1..=4);
            let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = sigma(&l);
            for j in 0..=n {
                let oracle = subset_sigma(&l, j);
                assert!((s.get(j) - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
            }
            let prod: f64 = l.iter().product();
            assert!((s.get(n) - prod).abs() <= 1e-10 * (1.0 + prod.abs()));
        }
    }

    #[test]
    fn hessian_density_examples() {
        let id = HermitianMatrix::identity(3);
        for k in 1..=3 {
            assert!((hessian_density(&id, &id, k).unwrap() - 1.0).abs() < 1e-14);
        }
        let two = HermitianMatrix::from_diag(&[2.0, 2.0, 2.0]);
        assert!((hessian_density(&two, &id, 2).unwrap() - 4.0).abs() < 1e-13);
        let a = HermitianMatrix::from_diag(&[3.0, 1.0, -0.5]);
        assert!((hessian_density(&a, &id, 2).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_examples() {
        let id = HermitianMatrix::identity(3);
        let a2 = HermitianMatrix::from_diag(&[4.0, 1.0, 1.0]);
        let m = mixed_hessian_density(&[id, a2], &id).unwrap();
        assert!((m - 2.0).abs() < 1e-13);
        // Multilinearity forces a zero argument to give zero.
        let zero = HermitianMatrix::zeros(3);
        let m0 = mixed_hessian_density(&[id, zero], &id).unwrap();
        assert!(m0.abs() < 1e-14);
        let gap = garding_gap(&[id, a2], &id).unwrap();
        assert!((gap - (2.0 - 3f64.sqrt())).abs() < 1e-13);
        assert!(garding_gap(&[a2, a2], &id).unwrap().abs() < 1e-13);
    }

    #[test]
    fn garding_rejects_outside_cone() {
        let id = HermitianMatrix::identity(3);
        let out = HermitianMatrix::from_diag(&[-1.0, -1.0, 0.5]);
        assert!(matches!(
            garding_gap(&[id, out], &id),
            Err(AlgebraError::ConeViolation { index: 1, .. })
        ));
    }

    #[test]
    fn cone_examples() {
        let id = HermitianMatrix::identity(3);
        let cert = in_gamma_k(&id, &id, 3).unwrap();
        assert!(cert.member && cert.margins.iter().all(|m| (m - 1.0).abs() < 1e-14));

        let a = HermitianMatrix::from_diag(&[3.0, 1.0, -0.5]);
        let c2 = in_gamma_k(&a, &id, 2).unwrap();
        assert!(c2.member);
        assert!((c2.margins[0] - 7.0 / 6.0).abs() < 1e-14);
        assert!((c2.margins[1] - 1.0 / 3.0).abs() < 1e-14);
        let c3 = in_gamma_k(&a, &id, 3).unwrap();
        assert!(!c3.member && (c3.margins[2] + 1.5).abs() < 1e-14);
        assert_eq!(c3.worst_margin, c3.margins[2]);

        let b = HermitianMatrix::from_diag(&[-1.0, 5.0, 5.0]);
        let s = sigma(&relative_eigenvalues(&b, &id).unwrap());
        assert!((s.get(1) - 9.0).abs() < 1e-13 && (s.get(2) - 15.0).abs() < 1e-12);
        assert!(in_gamma_k(&b, &id, 2).unwrap().member);
        let c3 = in_gamma_k(&b, &id, 3).unwrap();
        assert!(!c3.member && (c3.margins[2] + 25.0).abs() < 1e-12);
    }

    #[test]
    fn transform_route_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let id4 = HermitianMatrix::identity(4);
        for _ in 0..200 {
            let n = rng.gen_range(2..=4);
            let a = random_hermitian(&mut rng, n);
            let id = HermitianMatrix::identity(n);
            let l = relative_eigenvalues(&a, &id).unwrap();
            let s = sigma(&l);
            let fast = sigma_identity(&a);
            for j in 0..=n {
                assert!((s.get(j) - fast[j]).abs() < 1e-12 * (1.0 + s.get(j).abs()));
            }
        }
        let _ = id4;
    }

    #[test]
    fn transform_is_the_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = 3;
            let a = random_hermitian(&mut rng, n).shifted(2.0);
            let b = random_hermitian(&mut rng, n);
            for k in 1..=n {
                let (_, t) = sigma_with_transform(&a, k);
                let analytic = t.trace_product(&b);
                let h = 1e-6;
                let sp = sigma_identity(&a.add(&b.scaled(h)))[k];
                let sm = sigma_identity(&a.add(&b.scaled(-h)))[k];
                let fd = (sp - sm) / (2.0 * h);
                assert!((analytic - fd).abs() < 1e-6 * (1.0 + fd.abs()), "k={k}");
            }
        }
    }

    #[test]
    fn entry_shift_lands_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(1..=n);
            let a = random_hermitian(&mut rng, n);
            let s = sigma_identity(&a);
            let t = cone_entry_shift(&s[..=n], k);
            let inside = sigma_identity(&a.shifted(t + 1e-7));
            let outside = sigma_identity(&a.shifted(t - 1e-7));
            assert!((1..=k).all(|j| inside[j] > 0.0));
            assert!((1..=k).any(|j| outside[j] <= 0.0), "n={n} k={k} t={t} s={s:?} out={outside:?}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
