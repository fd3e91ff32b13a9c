use khessian::algebra::hessian_density;
use khessian::radial::*;
use khessian::HermitianMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn interior_error(fam: RadialDensityFamily, n: usize, k: usize) -> f64 {
    let sol = radial_solve(&fam, n, k, 1e-6, 4096).unwrap();
    let dens = radial_hessian_density(&sol.profile).unwrap();
    let m = dens.len();
    (8..m - 8)
        .map(|i| (dens[i] / fam.eval(sol.profile.rho[i]) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn solution_reproduces_its_density() {
    let cases = [
        (RadialDensityFamily::constant(), 3, 2),
        (RadialDensityFamily::new(1.0, 0.5, 0.5).unwrap(), 3, 2),
        (RadialDensityFamily::new(2.0, 3.0, 0.5).unwrap(), 3, 2),
        (RadialDensityFamily::new(1.0, 2.0, 0.5).unwrap(), 2, 1),
        (RadialDensityFamily::new(0.5, 0.0, 0.5).unwrap(), 3, 3),
    ];
    for (fam, n, k) in cases {
        let e = interior_error(fam, n, k);
        assert!(e <= 1e-6, "{fam:?} n={n} k={k}: {e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn one_dimensional_formula_matches_matrix_density(
        (n, k) in prop_oneof![Just((2usize, 1usize)), Just((2, 2)), Just((3, 2)), Just((3, 3))],
        z in prop::collection::vec(-1.0f64..1.0, 6),
        chi1 in 0.1f64..3.0,
        chi2 in -2.0f64..2.0,
    ) {
        let z: Vec<Complex64> = (0..n).map(|i| Complex64::new(z[2 * i], z[2 * i + 1])).collect();
        let rho: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        prop_assume!(rho > 1e-3);
        // 2(χ′ δ_ij + χ″ z̄_i z_j)
        let diag: Vec<f64> = z.iter().map(|w| 2.0 * (chi1 + chi2 * w.norm_sqr())).collect();
        let mut a = HermitianMatrix::from_diag(&diag);
        for i in 0..n {
            for j in i + 1..n {
                a.set_pair(i, j, 2.0 * chi2 * z[i].conj() * z[j]);
            }
        }
        let matrix = hessian_density(&a, &HermitianMatrix::identity(n), k).unwrap();
        let formula = radial_point_density(n, k, rho, chi1, chi2);
        prop_assert!((matrix - formula).abs() <= 1e-10 * (1.0 + formula.abs()), "{matrix} vs {formula}");
    }
}

#[test]
fn oscillation_threshold_sits_below_weighted_threshold() {
    for (n, k) in [(3, 2), (2, 1), (3, 1), (4, 3)] {
        let scan = threshold_scan(n, k, &default_b_grid(n, k), &[0.5, 0.25, 0.125], 1.0, 1e-10, 4096).unwrap();
        assert!(scan.coherent(), "n={n} k={k}");
        for delta in scan.deltas() {
            let (lo, hi) = scan.osc_bracket(delta).unwrap();
            assert!(lo < k as f64 && (k as f64) < hi, "n={n} k={k}: osc ({lo}, {hi})");
            let (wlo, whi) = scan.weighted_bracket(delta).unwrap();
            let w = k as f64 + k as f64 / n as f64;
            assert!(wlo < w && w < whi, "n={n} k={k}: weighted ({wlo}, {whi})");
            assert!(hi <= wlo + 1e-12 || lo < wlo);
        }
        // Some bounded-oscillation densities fail the weighted condition.
        assert!(scan.rows.iter().any(|r| r.osc_bounded && !r.weighted_finite));
    }
}

#[test]
fn log_power_above_and_below_k() {
    let (n, k) = (3, 2);
    let fast = radial_solve(&RadialDensityFamily::new(2.0, 4.0, 0.5).unwrap(), n, k, 1e-10, 4096).unwrap();
    assert!(fast.bounded());
    let lim = fast.osc_limit.unwrap();
    let traced: Vec<f64> = fast.osc_trace.iter().map(|t| t.1).collect();
    assert!(traced.windows(2).all(|w| w[1] >= w[0]));
    assert!(*traced.last().unwrap() <= lim);

    // osc ~ L^{1 − b/k} for b < k.
    let slow = radial_solve(&RadialDensityFamily::new(2.0, 1.0, 0.5).unwrap(), n, k, 1e-10, 4096).unwrap();
    assert!(!slow.bounded());
    assert!((slow.divergence_exponent() - 0.5).abs() <= 0.02, "{}", slow.divergence_exponent());
}

#[test]
fn power_family_lebesgue_exponents() {
    // ρ^{−a} is in L^p(s^{n−1}ds) iff p·a < n.
    let fam = RadialDensityFamily::new(1.0, 0.0, 0.5).unwrap();
    let integ = integrability_weight(&fam, 3, 2, 0.5, &[1.0, 2.5, 3.5, 5.0]).unwrap();
    let finite: Vec<bool> = integ.lp.iter().map(|(_, f)| f.finite()).collect();
    assert_eq!(finite, vec![true, true, false, false]);
    assert!(integ.weighted.finite());
}

#[test]
fn rejected_inputs() {
    assert!(threshold_scan(3, 3, &[1.0], &[0.5], 1.0, 1e-4, 64).is_err());
    let heavy = RadialDensityFamily::new(3.0, 0.5, 0.5).unwrap();
    assert!(matches!(
        radial_solve(&heavy, 3, 2, 1e-4, 64),
        Err(RadialError::NonIntegrableSource { .. })
    ));
    assert!(log_grid(2.0, 16).is_err());
}
