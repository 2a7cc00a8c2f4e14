use std::sync::Arc;

use philap_core::{
    clip_monotonicity_check, default_bump_builder, energy_gradient, energy_value, minimize,
    minimize_multistart, BumpNonlinearity, EnergyProblem, Forcing, GridFunction, MinimizeOptions,
    NFunctionSpec, Polynomial, RadialGrid,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tent() -> BumpNonlinearity {
    default_bump_builder(&[1.0, 3.0, 5.0], &[2.0, 4.0], &[2.0, 1.0]).unwrap()
}

fn specs() -> Vec<NFunctionSpec> {
    vec![
        NFunctionSpec::power(2.0).unwrap(),
        NFunctionSpec::power(3.0).unwrap(),
        NFunctionSpec::exp_growth(),
        NFunctionSpec::p_log(1.0).unwrap(),
        NFunctionSpec::power_gamma(1.5).unwrap(),
        NFunctionSpec::two_power(1.8, 3.0).unwrap(),
    ]
}

/// Smooth random profile in `[0, cap]` with `u(R) = 0` and no flat cells.
fn random_profile(rng: &mut ChaCha8Rng, grid: &Arc<RadialGrid>, cap: f64) -> GridFunction {
    let amp = rng.gen_range(0.3..0.95) * cap;
    let wiggle = rng.gen_range(0.0..0.1) * cap;
    let freq = rng.gen_range(1.0..6.0);
    let radius = grid.radius();
    GridFunction::from_fn(grid.clone(), |r| {
        let s = 1.0 - r / radius;
        (amp * s + wiggle * (freq * r).sin() * s).clamp(0.0, cap)
    })
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bn = tent();
    let specs = specs();
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let nf = &specs[trial % specs.len()];
        let dim = 1 + trial % 3;
        let radius = rng.gen_range(0.5..2.0);
        let grid = Arc::new(RadialGrid::uniform(radius, dim, 41).unwrap());
        let k = 2 + trial % 2;
        let tf = bn.truncate(k).unwrap();
        let lambda = rng.gen_range(0.5..50.0);
        let u = random_profile(&mut rng, &grid, tf.cap());
        let g = energy_gradient(&grid, nf, &tf, lambda, &u).unwrap();
        let gmax = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..grid.len() - 1 {
            let h = 1e-6 * (1.0 + u.values()[i].abs());
            let mut plus = u.clone();
            plus.values_mut()[i] += h;
            let mut minus = u.clone();
            minus.values_mut()[i] -= h;
            let fd = (energy_value(&grid, nf, &tf, lambda, &plus).unwrap()
                - energy_value(&grid, nf, &tf, lambda, &minus).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - g.values()[i]).abs() / gmax);
        }
    }
    assert!(worst <= 1e-6, "max relative discrepancy {worst:e}");
}

#[test]
fn clipping_never_raises_the_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bn = tent();
    for nf in [
        NFunctionSpec::power(2.0).unwrap(),
        NFunctionSpec::exp_growth(),
        NFunctionSpec::p_log(1.0).unwrap(),
    ] {
        for dim in 1..=3 {
            let grid = Arc::new(RadialGrid::uniform(1.0, dim, 61).unwrap());
            for k in 2..=3 {
                let tf = bn.truncate(k).unwrap();
                let cap = tf.cap();
                let mut violations = 0;
                for _ in 0..100 {
                    let n = grid.len();
                    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..cap + 1.0)).collect();
                    v[n - 1] = 0.0;
                    let u = GridFunction::new(grid.clone(), v).unwrap();
                    if !clip_monotonicity_check(&grid, &nf, &tf, 30.0, &u).unwrap() {
                        violations += 1;
                    }
                }
                assert_eq!(violations, 0, "{nf:?} N={dim} k={k}");
            }
        }
    }
}

#[test]
fn minimizers_stay_in_the_box_with_inward_multipliers() {
    let bn = tent();
    let opts = MinimizeOptions::default();
    for nf in [
        NFunctionSpec::power(2.0).unwrap(),
        NFunctionSpec::exp_growth(),
    ] {
        for (dim, lambda) in [(1, 120.0), (2, 400.0)] {
            let grid = Arc::new(RadialGrid::uniform(1.0, dim, 201).unwrap());
            for k in 2..=3 {
                let tf = bn.truncate(k).unwrap();
                let ms = minimize_multistart(&grid, &nf, &tf, lambda, &opts).unwrap();
                let problem = EnergyProblem::new(&grid, &nf, &tf, lambda).unwrap();
                for run in ms.runs.iter().filter(|r| r.converged) {
                    let u = run.u.values();
                    assert!(u.iter().all(|&v| (0.0..=tf.cap()).contains(&v)));
                    assert_eq!(run.box_violation, 0.0);
                    assert!(
                        run.weak_residual <= 10.0 * opts.tol || has_active_nodes(u, tf.cap()),
                        "weak residual {:e}",
                        run.weak_residual
                    );
                    let g = problem.gradient(u);
                    let slack = opts.tol * problem.gradient_scale(u);
                    for (i, (&v, &w)) in u.iter().zip(grid.weights()).enumerate() {
                        if i + 1 == u.len() {
                            continue;
                        }
                        if v == 0.0 {
                            assert!(g[i] / w >= -slack, "lower node {i}: {}", g[i] / w);
                        } else if v == tf.cap() {
                            assert!(g[i] / w <= slack, "upper node {i}: {}", g[i] / w);
                        } else {
                            assert!((g[i] / w).abs() <= slack, "free node {i}: {}", g[i] / w);
                        }
                    }
                }
            }
        }
    }
}

fn has_active_nodes(u: &[f64], cap: f64) -> bool {
    u[..u.len() - 1].iter().any(|&v| v == 0.0 || v == cap)
}

#[test]
fn interior_minimizers_satisfy_the_weak_identity() {
    // small λ keeps v strictly inside the box, so every hat function is admissible
    let bn = tent();
    let opts = MinimizeOptions::default();
    for nf in [
        NFunctionSpec::power(2.0).unwrap(),
        NFunctionSpec::p_log(1.0).unwrap(),
    ] {
        let grid = Arc::new(RadialGrid::uniform(1.0, 2, 151).unwrap());
        let tf = bn.truncate(2).unwrap();
        let zero = GridFunction::zeros(grid.clone());
        let res = minimize(&grid, &nf, &tf, 3.0, &zero, &opts).unwrap();
        assert!(res.converged);
        assert!(res.sup_norm() < tf.cap());
        assert!(
            res.weak_residual <= 10.0 * opts.tol,
            "{:e}",
            res.weak_residual
        );
    }
}

#[test]
fn three_dimensional_poisson_converges_at_second_order() {
    let nf = NFunctionSpec::power(2.0).unwrap();
    let f = Polynomial::constant(1.0);
    let opts = MinimizeOptions {
        tol: 1e-12,
        max_iter: 20_000,
        ..MinimizeOptions::default()
    };
    let errors: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| {
            let grid = Arc::new(RadialGrid::uniform(1.0, 3, n).unwrap());
            let zero = GridFunction::zeros(grid.clone());
            let res = minimize(&grid, &nf, &f, 1.0, &zero, &opts).unwrap();
            assert!(res.converged, "n={n}: {:?}", res.stop);
            res.u
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(u, r)| (u - (1.0 - r * r) / 6.0).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.4..=4.6).contains(&ratio), "errors {errors:?}");
    }
}

proptest! {
    #[test]
    fn truncation_agrees_with_f_below_the_cap(k in 2usize..=3, s in -2.0f64..7.0) {
        let bn = tent();
        let tf = bn.truncate(k).unwrap();
        let want = if s <= 0.0 {
            bn.eval(0.0)
        } else if s <= bn.a(k) {
            bn.eval(s)
        } else {
            0.0
        };
        prop_assert_eq!(tf.value(s), want);
    }

    #[test]
    fn primitive_differentiates_to_f(k in 2usize..=3, s in 0.01f64..6.0) {
        let tf = tent().truncate(k).unwrap();
        let h = 1e-6;
        let fd = (tf.primitive(s + h) - tf.primitive(s - h)) / (2.0 * h);
        // within h of a kink the difference quotient averages the two slopes
        let near_kink = tf.breakpoints().iter().any(|&b| (s - b).abs() < 2.0 * h);
        prop_assume!(!near_kink);
        prop_assert!((fd - tf.value(s)).abs() <= 1e-6, "{} vs {}", fd, tf.value(s));
    }
}
