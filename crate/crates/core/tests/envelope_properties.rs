use khessian::envelope::*;
use khessian::solver::SolverSettings;
use khessian::torus::is_k_subharmonic;
use khessian::{FormField, GridFunction, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const TOL: f64 = 1e-12;

fn obstacle(g: &TorusGrid, seed: u64, amp: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::from_fn(g, |x| {
        amp * (c[0] * (2.0 * PI * x[0]).cos()
            + c[1] * (2.0 * PI * x[1]).sin()
            + c[2] * (2.0 * PI * (x[0] + x[3])).cos()
            + c[3] * (4.0 * PI * x[2]).sin())
    })
}

fn oracle(k: usize, u: &GridFunction) -> GridFunction {
    let prob = ObstacleProblem::new(k, FormField::reference(u.grid()), u.clone()).unwrap();
    envelope_sweep_oracle(&prob, 200_000, 1e-14).unwrap()
}

fn below(a: &GridFunction, b: &GridFunction) -> f64 {
    // max(a − b)
    a.lincomb(1.0, b, -1.0).unwrap().max()
}

#[test]
fn oracle_output_is_certified_and_below_the_obstacle() {
    let g = TorusGrid::new(2, 8).unwrap();
    for seed in 0..3 {
        let u = obstacle(&g, seed, 0.1);
        for k in 1..=2 {
            let e = oracle(k, &u);
            assert!(below(&e, &u) <= 0.0);
            let cert = is_k_subharmonic(&FormField::reference(&g), &e, k).unwrap();
            assert!(cert.worst_margin >= -1e-9, "seed {seed} k {k}: {}", cert.worst_margin);
        }
    }
}

#[test]
fn idempotence() {
    let g = TorusGrid::new(2, 8).unwrap();
    let u = obstacle(&g, 1, 0.1);
    let e = oracle(2, &u);
    assert!(oracle(2, &e).sup_distance(&e).unwrap() <= 1e-9);
}

#[test]
fn monotonicity() {
    let g = TorusGrid::new(2, 8).unwrap();
    for seed in 0..3 {
        let u1 = obstacle(&g, seed, 0.1);
        let bump = obstacle(&g, seed + 50, 0.05).map(|v| v.abs());
        let u2 = u1.lincomb(1.0, &bump, 1.0).unwrap();
        assert!(below(&oracle(2, &u1), &oracle(2, &u2)) <= 1e-9);
    }
}

#[test]
fn translation() {
    let g = TorusGrid::new(2, 8).unwrap();
    let u = obstacle(&g, 4, 0.1);
    let c = 0.375;
    let shifted = oracle(2, &u.add_constant(c));
    assert!(shifted.sup_distance(&oracle(2, &u).add_constant(c)).unwrap() <= TOL);

    let set = SolverSettings::default();
    let run = |w: &GridFunction| {
        let prob = ObstacleProblem::new(2, FormField::reference(&g), w.clone()).unwrap();
        envelope_penalized(&prob, &[2, 4, 8], &set).unwrap().envelope
    };
    let d = run(&u.add_constant(c)).sup_distance(&run(&u).add_constant(c)).unwrap();
    assert!(d <= 1e-8, "{d}");
}

#[test]
fn extremality_over_certified_competitors() {
    let g = TorusGrid::new(2, 8).unwrap();
    let om = FormField::reference(&g);
    let u = obstacle(&g, 7, 0.1);
    let e = oracle(2, &u);
    let mut tested = 0;
    for seed in 100..130 {
        let v = obstacle(&g, seed, 0.01);
        if !is_k_subharmonic(&om, &v, 2).unwrap().member {
            continue;
        }
        let v = v.add_constant(-below(&v, &u));
        assert!(below(&v, &e) <= 1e-9, "seed {seed}");
        tested += 1;
    }
    assert!(tested >= 5);
}

#[test]
fn smaller_cone_gives_smaller_envelope() {
    let g = TorusGrid::new(3, 4).unwrap();
    let u = obstacle(&g, 2, 0.05);
    let es: Vec<_> = (1..=3).map(|k| oracle(k, &u)).collect();
    assert!(below(&es[1], &es[0]) <= 1e-9);
    assert!(below(&es[2], &es[1]) <= 1e-9);
}

#[test]
fn subharmonic_obstacle_is_fixed() {
    let g = TorusGrid::new(2, 8).unwrap();
    let u = obstacle(&g, 3, 0.005);
    assert!(is_k_subharmonic(&FormField::reference(&g), &u, 2).unwrap().member);
    assert_eq!(oracle(2, &u), u);
}

#[test]
fn penalized_schedule_on_a_cosine_obstacle() {
    let g = TorusGrid::new(2, 8).unwrap();
    let om = FormField::reference(&g);
    let u = GridFunction::from_fn(&g, |x| -0.1 * (2.0 * PI * x[0]).cos());
    let prob = ObstacleProblem::new(2, om.clone(), u.clone()).unwrap();
    let res = envelope_penalized(&prob, &default_schedule(), &SolverSettings::default()).unwrap();
    let js: Vec<usize> = res.stages.iter().map(|s| s.j).collect();
    assert_eq!(js, default_schedule());
    assert!(res.rate_check(3).pass, "{:?}", res.rate_check(3));
    assert!(res.worst_margin >= -1e-12);

    // Stages stay below the obstacle and rise towards it.
    for pair in res.stage_fields.windows(2) {
        assert!(below(&pair[0], &pair[1]) <= 1e-9);
    }
    assert!(res.stages.iter().all(|s| s.max_excess <= 1e-9));

    let c = contact_set(&res.envelope, &u, &om, 2, g.h() * g.h()).unwrap();
    assert!(c.contact_points > 0 && c.contact_points < g.len());
    assert!(c.off_contact_fraction() < 1e-6);

    let o = envelope_sweep_oracle(&prob, 200_000, 1e-14).unwrap();
    let d = res.envelope.sup_distance(&o).unwrap();
    assert!(d <= 0.05 * u.osc(), "{d}");
}
