use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use singer_bench::logistic;
use singer_core::dynamics::{find_periodic_orbits, singer_check};
use singer_core::schwarzian::negativity_scan;
use singer_core::{iterate_jet, Settings};

fn jets(c: &mut Criterion) {
    let f = logistic(3.8);
    let mut group = c.benchmark_group("iterate_jet");
    for n in [1usize, 8, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| iterate_jet(&f, black_box(0.3), n))
        });
    }
    group.finish();
}

fn scans(c: &mut Criterion) {
    let f = logistic(3.8);
    let s = Settings::default();
    c.bench_function("negativity_scan n=4 grid=4096", |b| b.iter(|| negativity_scan(&f, 4, 4096, &s)));
}

fn orbits(c: &mut Criterion) {
    let s = Settings::default();
    let f = logistic(3.5);
    c.bench_function("find_periodic_orbits p<=8", |b| b.iter(|| find_periodic_orbits(&f, 8, 4096, &s)));
    let f = logistic(3.2);
    c.bench_function("singer_check mu=3.2", |b| b.iter(|| singer_check(&f, 8, &s)));
}

criterion_group!(benches, jets, scans, orbits);
criterion_main!(benches);
