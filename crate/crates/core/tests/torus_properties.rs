use khessian::torus::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_field(g: &TorusGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::new(g.clone(), v).unwrap()
}

/// A few random low-frequency modes with amplitude `amp`.
fn trig_field(g: &TorusGrid, seed: u64, amp: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = g.axes();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let freq = (0..axes).map(|_| rng.gen_range(-1i32..=1) as f64).collect();
            (freq, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    GridFunction::from_fn(g, |x| {
        modes
            .iter()
            .map(|(fr, c, ph)| {
                let arg: f64 = fr.iter().zip(x).map(|(f, x)| f * x).sum();
                amp * c * (2.0 * PI * arg + ph).sin()
            })
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stokes_sum_vanishes(seed in any::<u64>(), n in 1usize..=3) {
        let g = TorusGrid::new(n, if n == 3 { 4 } else { 6 }).unwrap();
        let phi = random_field(&g, seed);
        prop_assert!(discrete_stokes_integral(&phi).abs() <= 1e-13);
    }

    #[test]
    fn ddc_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = TorusGrid::new(2, 4).unwrap();
        let (phi, psi) = (random_field(&g, s1), random_field(&g, s2));
        let combo = phi.lincomb(a, &psi, b).unwrap();
        let (lhs, f1, f2) = (ddc(&combo), ddc(&phi), ddc(&psi));
        let scale = 1.0 / (g.h() * g.h());
        for i in 0..g.len() {
            let rhs = f1.at(i).scaled(a).add(&f2.at(i).scaled(b));
            let diff = lhs.at(i).add(&rhs.scaled(-1.0)).norm();
            prop_assert!(diff <= 1e-12 * scale * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn max_agrees_with_dominant_function_inside(s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..=2) {
        let g = TorusGrid::new(2, 6).unwrap();
        let om = FormField::reference(&g).shifted(1.0);
        let phi = trig_field(&g, s1, 0.02);
        let psi = trig_field(&g, s2, 0.02).add_constant(0.01);
        let m = pointwise_max(&phi, &psi).unwrap();
        let interior = stencil_interior(&phi, &psi, 1e-12).unwrap();
        let hm = hessian_measure(&om, &m, k).unwrap();
        let hp = hessian_measure(&om, &phi, k).unwrap();
        for (i, inside) in interior.iter().enumerate() {
            if *inside {
                prop_assert_eq!(hm.density.values()[i], hp.density.values()[i]);
            }
        }
    }

    #[test]
    fn certified_fields_have_positive_mass(seed in any::<u64>(), k in 1usize..=3) {
        let g = TorusGrid::new(3, 4).unwrap();
        let om = FormField::reference(&g);
        let phi = trig_field(&g, seed, 0.005);
        let cert = is_k_subharmonic(&om, &phi, k).unwrap();
        prop_assume!(cert.member);
        prop_assert!(hessian_measure(&om, &phi, k).unwrap().total_mass > 0.0);
    }
}

#[test]
fn ddc_is_second_order() {
    // φ = sin 2π(x_1 + y_2): H_11 = H_22 = −2π² sin, H_12 = −2π² i sin.
    let err = |size: usize| {
        let g = TorusGrid::new(2, size).unwrap();
        let phi = GridFunction::from_fn(&g, |x| (2.0 * PI * (x[0] + x[3])).sin());
        let f = ddc(&phi);
        (0..g.len())
            .map(|i| {
                let x = g.position(i);
                let s = -2.0 * PI * PI * (2.0 * PI * (x[0] + x[3])).sin();
                let a = f.at(i);
                let e = [
                    a.get(0, 0).re - s,
                    a.get(1, 1).re - s,
                    a.get(0, 1).re,
                    a.get(0, 1).im - s,
                ];
                e.iter().map(|v| v.abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let (e8, e16) = (err(8), err(16));
    let ratio = e8 / e16;
    assert!((ratio - 4.0).abs() <= 1.2, "ratio {ratio}");
}

#[test]
fn normalized_family_has_bounded_l1_mass() {
    // sup-normalized certified fields: mean(−φ) stays under one constant.
    let g = TorusGrid::new(2, 8).unwrap();
    let om = FormField::reference(&g);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let phi = trig_field(&g, seed, 0.01);
        if !is_k_subharmonic(&om, &phi, 2).unwrap().member {
            continue;
        }
        let normalized = phi.add_constant(-phi.max());
        worst = worst.max(-normalized.mean());
    }
    assert!(worst > 0.0 && worst < 0.1, "{worst}");
}

#[test]
fn field_files_round_trip() {
    let g = TorusGrid::new(2, 4).unwrap();
    let phi = random_field(&g, 7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.bin");
    write_field(&path, &StoredField::Potential(phi.clone()), Default::default()).unwrap();
    let (back, _) = read_field(&path).unwrap();
    match back {
        StoredField::Potential(p) => assert_eq!(p, phi),
        other => panic!("unexpected kind {:?}", other.kind()),
    }
}

#[test]
fn resampling_keeps_shared_points_and_is_second_order() {
    let coarse = TorusGrid::new(2, 4).unwrap();
    let fine = TorusGrid::new(2, 8).unwrap();
    let phi = random_field(&coarse, 3);
    assert_eq!(phi.resample(&coarse).unwrap(), phi);
    let up = phi.resample(&fine).unwrap();
    for i in 0..coarse.len() {
        let c: Vec<usize> = coarse.coordinates(i).iter().map(|c| 2 * c).collect();
        assert_eq!(up.values()[fine.index(&c)], phi.values()[i]);
    }
    let f = |x: &[f64]| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[3]).cos();
    let err = |size: usize| {
        let g = TorusGrid::new(2, size).unwrap();
        let t = TorusGrid::new(2, 3 * size / 2).unwrap();
        GridFunction::from_fn(&g, f).resample(&t).unwrap().sup_distance(&GridFunction::from_fn(&t, f)).unwrap()
    };
    let ratio = err(8) / err(16);
    assert!((ratio - 4.0).abs() <= 1.2, "{ratio}");
}
