//! Seeded random Hermitian matrices and Γ_k samples.

use khessian::algebra::{cone_shift_relative, AlgebraError};
use khessian::HermitianMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Entries (real diagonal, complex off-diagonal parts) uniform in `[−1, 1]`.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> HermitianMatrix {
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut m = HermitianMatrix::from_diag(&diag);
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            m.set_pair(i, j, z);
        }
    }
    m
}

/// `B + (t* + 0.1)·Id` with `B` random and `t*` the smallest shift that
/// puts `B` on the closed cone, so samples reach close to the boundary.
pub fn cone_sample<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<HermitianMatrix, AlgebraError> {
    let b = random_hermitian(rng, n);
    let t = cone_shift_relative(&b, &HermitianMatrix::identity(n), k)?;
    Ok(b.shifted(t + 0.1))
}

pub fn cone_tuple<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<Vec<HermitianMatrix>, AlgebraError> {
    (0..k).map(|_| cone_sample(rng, n, k)).collect()
}
