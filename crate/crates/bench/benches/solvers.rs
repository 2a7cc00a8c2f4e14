use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use philap_bench::{phis, tent, unit_grid};
use philap_core::{
    energy_gradient, minimize_multistart, plateau_guess, scan_boundary, shoot, MinimizeOptions,
    ShootOptions,
};

fn g_inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("g_inverse");
    for (name, nf) in phis() {
        let ws: Vec<f64> = (1..=64).map(|i| 0.37 * i as f64).collect();
        group.bench_function(name, |b| {
            b.iter(|| {
                ws.iter()
                    .map(|&w| nf.g_inverse(black_box(w)).unwrap())
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let grid = unit_grid(2, 2000);
    let tf = tent().truncate(3).unwrap();
    let u = plateau_guess(&grid, tf.cap(), 1.0 / 8.0);
    let mut group = c.benchmark_group("energy_gradient_n2000");
    for (name, nf) in phis() {
        group.bench_function(name, |b| {
            b.iter(|| energy_gradient(&grid, &nf, &tf, black_box(100.0), &u).unwrap())
        });
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let tf = tent().truncate(3).unwrap();
    let nf = &phis()[0].1;
    let opts = MinimizeOptions::default();
    let mut group = c.benchmark_group("minimize_multistart_p2");
    group.sample_size(10);
    for n in [500, 2000] {
        let grid = unit_grid(1, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| minimize_multistart(grid, nf, &tf, black_box(110.0), &opts).unwrap())
        });
    }
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let bn = tent();
    let mut group = c.benchmark_group("shoot_n2000");
    for (name, nf) in phis() {
        group.bench_function(name, |b| {
            b.iter(|| shoot(&nf, &bn, 110.0, 1, 1.0, black_box(2.7), 1999).unwrap())
        });
    }
    group.finish();

    let opts = ShootOptions::default();
    let d_grid = opts.d_grid(bn.a_max());
    let nf = &phis()[0].1;
    let mut group = c.benchmark_group("scan_boundary_p2");
    group.sample_size(10);
    group.bench_function("400x2000", |b| {
        b.iter(|| scan_boundary(nf, &bn, black_box(110.0), 1, 1.0, &d_grid, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, g_inverse, gradient, multistart, shooting);
criterion_main!(benches);
