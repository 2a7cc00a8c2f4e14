//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use philap_core::{default_bump_builder, BumpNonlinearity, NFunctionSpec, RadialGrid};

/// Tent family with `a = (1, 3, 5)`, `b = (2, 4)`.
pub fn tent() -> BumpNonlinearity {
    default_bump_builder(&[1.0, 3.0, 5.0], &[2.0, 4.0], &[2.0, 1.0]).expect("valid tent family")
}

pub fn unit_grid(dimension: usize, nodes: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::uniform(1.0, dimension, nodes).expect("valid grid"))
}

/// The three `φ` the acceptance runs use, with their labels.
pub fn phis() -> Vec<(&'static str, NFunctionSpec)> {
    vec![
        ("power2", NFunctionSpec::power(2.0).expect("p = 2")),
        ("exp_growth", NFunctionSpec::exp_growth()),
        ("p_log1", NFunctionSpec::p_log(1.0).expect("p = 1")),
    ]
}
