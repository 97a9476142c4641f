//! Benchmark bodies, shared by `benches/main.rs`.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use geoflow_core::capacity::{level_set_grid, solve_harmonic, TGrid};
use geoflow_core::fixtures::{perturbed, DEFAULT_SEED};
use geoflow_core::monotone::{verify, Tolerances};
use geoflow_core::yamabe::{model_test_function, yamabe_quotient};
use geoflow_core::ProfileSpec;

fn horizon() -> geoflow_core::WarpedProfile {
    ProfileSpec::Schwarzschild { m: 2.0, r: 1.0 }.build().unwrap()
}

pub fn solve(c: &mut Criterion) {
    let w = horizon();
    let series = perturbed(1, DEFAULT_SEED)[0].build().unwrap();
    let mut group = c.benchmark_group("solve_harmonic");
    group.bench_function("schwarzschild", |b| b.iter(|| solve_harmonic(black_box(&w)).unwrap()));
    group.bench_function("conformal_series", |b| {
        b.iter(|| solve_harmonic(black_box(&series)).unwrap())
    });
    group.finish();
}

pub fn levels(c: &mut Criterion) {
    let h = solve_harmonic(&horizon()).unwrap();
    let mut group = c.benchmark_group("level_set_grid");
    for n in [64, 512, 4096] {
        let grid = TGrid::uniform(10.0, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| level_set_grid(&h, grid).unwrap())
        });
    }
    group.finish();
}

pub fn pipeline(c: &mut Criterion) {
    let h = solve_harmonic(&horizon()).unwrap();
    let grid = TGrid::default();
    let tol = Tolerances::default();
    let f = model_test_function().unwrap();
    c.bench_function("verify", |b| b.iter(|| verify(&h, &grid, &tol).unwrap()));
    c.bench_function("yamabe_quotient", |b| b.iter(|| yamabe_quotient(&h, Some(&f)).unwrap()));
}

pub fn benchmarks(c: &mut Criterion) {
    solve(c);
    levels(c);
    pipeline(c);
}
