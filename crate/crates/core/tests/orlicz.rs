use std::sync::Arc;

use philap_core::{delta2_index, luxemburg_norm, GridFunction, NFunctionSpec, RadialGrid};
use proptest::prelude::*;

fn families() -> Vec<NFunctionSpec> {
    vec![
        NFunctionSpec::power(1.5).unwrap(),
        NFunctionSpec::power(2.0).unwrap(),
        NFunctionSpec::power(3.5).unwrap(),
        NFunctionSpec::exp_growth(),
        NFunctionSpec::power_gamma(1.5).unwrap(),
        NFunctionSpec::p_log(1.0).unwrap(),
        NFunctionSpec::p_log(2.0).unwrap(),
        NFunctionSpec::two_power(1.8, 3.0).unwrap(),
        NFunctionSpec::custom(vec![0.1, 1.0, 10.0], vec![0.5, 1.0, 3.0]).unwrap(),
    ]
}

fn family() -> impl Strategy<Value = NFunctionSpec> {
    (0..families().len()).prop_map(|i| families()[i].clone())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn young_inequality(spec in family(), t in 1e-3f64..8.0, s in 1e-3f64..30.0) {
        let lhs = t * s;
        let rhs = spec.big_phi(t).unwrap() + spec.conjugate_eval(s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10), "{lhs} > {rhs}");
        let g = spec.g_eval(t).unwrap();
        let eq = spec.big_phi(t).unwrap() + spec.conjugate_eval(g).unwrap();
        prop_assert!(rel(t * g, eq) <= 1e-8, "equality case {} vs {}", t * g, eq);
    }

    #[test]
    fn big_phi_is_midpoint_convex(spec in family(), x in 0.0f64..6.0, y in 0.0f64..6.0) {
        let mid = spec.big_phi(0.5 * (x + y)).unwrap();
        let avg = 0.5 * (spec.big_phi(x).unwrap() + spec.big_phi(y).unwrap());
        prop_assert!(mid <= avg * (1.0 + 1e-10) + 1e-15);
    }

    #[test]
    fn g_inverse_round_trip(spec in family(), t in -12.0f64..12.0) {
        let w = spec.g_eval(t).unwrap();
        let back = spec.g_inverse(w).unwrap();
        prop_assert!((spec.g_eval(back).unwrap() - w).abs() <= 1e-10 * (1.0 + w.abs()));
        prop_assert!((back - t).abs() <= 1e-8 * (1.0 + t.abs()));
    }

    #[test]
    fn luxemburg_norm_is_a_norm(
        spec in family(),
        c in -4.0f64..4.0,
        amp in 0.1f64..3.0,
        freq in 0.5f64..3.0,
    ) {
        let grid = Arc::new(RadialGrid::uniform(1.0, 2, 41).unwrap());
        let u = GridFunction::from_fn(grid.clone(), |r| amp * (1.0 - r * r));
        let v = GridFunction::from_fn(grid.clone(), |r| (freq * r).sin() * (1.0 - r));
        let norm = |w: &GridFunction| luxemburg_norm(&spec, w, 1e-12).unwrap();
        let scaled = GridFunction::from_fn(grid.clone(), |r| c * amp * (1.0 - r * r));
        prop_assert!((norm(&scaled) - c.abs() * norm(&u)).abs() <= 1e-9 * (1.0 + norm(&scaled)));
        let sum = GridFunction::new(
            grid.clone(),
            u.values().iter().zip(v.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        prop_assert!(norm(&sum) <= (norm(&u) + norm(&v)) * (1.0 + 1e-10));
    }
}

#[test]
fn quadratic_luxemburg_norm_of_constants() {
    let spec = NFunctionSpec::power(2.0).unwrap();
    for (dim, radius) in [(1, 1.0), (2, 0.7), (3, 2.0)] {
        let grid = Arc::new(RadialGrid::uniform(radius, dim, 33).unwrap());
        let omega = grid.measure();
        for c in [0.25, 1.0, 7.5] {
            let u = GridFunction::from_fn(grid.clone(), |_| c);
            let got = luxemburg_norm(&spec, &u, 1e-12).unwrap();
            let want = c * (omega / 2.0).sqrt();
            assert!((got - want).abs() <= 1e-8, "N={dim} c={c}: {got} vs {want}");
        }
    }
}

#[test]
fn delta2_indices_of_power_kinds_equal_p() {
    for p in [1.5, 2.0, 3.0, 6.0] {
        let r = delta2_index(&NFunctionSpec::power(p).unwrap(), 1e-3, 50.0, 200).unwrap();
        assert!((r.ell_estimate - p).abs() <= 1e-8, "{r:?}");
        assert!((r.m_estimate - p).abs() <= 1e-8, "{r:?}");
        assert!(r.ell_estimate <= r.m_estimate);
        assert!(r.holds_phi && r.holds_conjugate, "{r:?}");
    }
}

#[test]
fn delta2_failures_are_flagged() {
    let exp = delta2_index(&NFunctionSpec::exp_growth(), 1e-3, 50.0, 200).unwrap();
    assert!(!exp.holds_phi, "{exp:?}");
    let plog = delta2_index(&NFunctionSpec::p_log(1.0).unwrap(), 1e-3, 50.0, 200).unwrap();
    assert!(plog.holds_phi, "{plog:?}");
    assert!(!plog.holds_conjugate, "{plog:?}");
    assert!(plog.ell_estimate <= plog.m_estimate);
}
