use khessian::algebra::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian(n: usize, entries: &[f64]) -> HermitianMatrix {
    let mut m = HermitianMatrix::from_diag(&entries[..n]);
    let mut q = n;
    for i in 0..n {
        for j in i + 1..n {
            m.set_pair(i, j, Complex64::new(entries[q], entries[q + 1]));
            q += 2;
        }
    }
    m
}

/// `B + (t* + 0.1)·Id` with `t*` the exact cone-entry shift of `B`.
fn cone_member(n: usize, k: usize, entries: &[f64]) -> HermitianMatrix {
    let b = hermitian(n, entries);
    let id = HermitianMatrix::identity(n);
    let t = cone_shift_relative(&b, &id, k).unwrap();
    b.shifted(t + 0.1)
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 16)
}

fn degrees() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2, 1)), Just((2, 2)), Just((3, 1)), Just((3, 2)), Just((3, 3)), Just((4, 2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polarization_on_the_diagonal((n, k) in degrees(), e in entries()) {
        let a = hermitian(n, &e);
        let id = HermitianMatrix::identity(n);
        let direct = hessian_density(&a, &id, k).unwrap();
        let mixed = mixed_hessian_density(&vec![a; k], &id).unwrap();
        prop_assert!((direct - mixed).abs() <= 1e-12 * (1.0 + direct.abs()), "{direct} vs {mixed}");
    }

    #[test]
    fn garding_gap_is_nonnegative((n, k) in degrees(), es in prop::collection::vec(entries(), 4)) {
        let id = HermitianMatrix::identity(n);
        let forms: Vec<_> = es.iter().take(k).map(|e| cone_member(n, k, e)).collect();
        prop_assert!(garding_gap(&forms, &id).unwrap() >= -1e-10);
    }

    #[test]
    fn maclaurin_chain_decreases((n, k) in degrees(), e in entries()) {
        let a = cone_member(n, k, &e);
        let lambda = relative_eigenvalues(&a, &HermitianMatrix::identity(n)).unwrap();
        let s = sigma(&lambda);
        let chain: Vec<f64> = (1..=k).map(|j| s.normalized(j).powf(1.0 / j as f64)).collect();
        for w in chain.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{chain:?}");
        }
    }

    #[test]
    fn homogeneity((n, k) in degrees(), e in entries(), t in 0.1f64..5.0) {
        let a = hermitian(n, &e);
        let id = HermitianMatrix::identity(n);
        let lhs = hessian_density(&a.scaled(t), &id, k).unwrap();
        let rhs = t.powi(k as i32) * hessian_density(&a, &id, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
    }

    #[test]
    fn congruence_invariance((n, k) in degrees(), e in entries(), m in prop::collection::vec(-1.0f64..1.0, 32)) {
        let a = hermitian(n, &e);
        // M = I + small perturbation keeps it comfortably invertible.
        let mat = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            Complex64::new(d + 0.3 * m[i * n + j], 0.3 * m[16 + i * n + j])
        });
        let id = HermitianMatrix::identity(n);
        let g = id.congruence(&mat).unwrap();
        let ma = a.congruence(&mat).unwrap();
        let lhs = hessian_density(&ma, &g, k).unwrap();
        let rhs = hessian_density(&a, &id, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn entry_shift_is_the_cone_boundary((n, k) in degrees(), e in entries()) {
        let b = hermitian(n, &e);
        let id = HermitianMatrix::identity(n);
        let t = cone_shift_relative(&b, &id, k).unwrap();
        prop_assert!(in_gamma_k(&b.shifted(t + 1e-6), &id, k).unwrap().member);
        prop_assert!(!in_gamma_k(&b.shifted(t - 1e-6), &id, k).unwrap().member);
    }

    #[test]
    fn recursion_agrees_with_eigenvalues((n, k) in degrees(), e in entries()) {
        let a = hermitian(n, &e);
        let (rec, _) = sigma_with_transform(&a, k);
        let eig = sigma(&relative_eigenvalues(&a, &HermitianMatrix::identity(n)).unwrap());
        for j in 0..=k {
            prop_assert!((rec[j] - eig.get(j)).abs() <= 1e-11 * (1.0 + eig.get(j).abs()));
        }
    }
}
