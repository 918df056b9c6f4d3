use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use povmlab::joint::{evolve_joint, joint_distribution, variance_budget};
use povmlab::scheme::{evolve_scheme, extract_povm, pointer_statistics, repeatability_check};
use povmlab_bench::{discrete_scheme, joint_scheme, position_scheme};

fn bench_two_body(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_body");
    for n in [64usize, 128, 256] {
        let (scheme, psi) = position_scheme(n);
        group.bench_with_input(BenchmarkId::new("evolve", n), &n, |b, _| {
            b.iter(|| evolve_scheme(&scheme, &psi).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pointer_statistics", n), &n, |b, _| {
            b.iter(|| pointer_statistics(&scheme, &psi).unwrap())
        });
    }
    for n in [32usize, 64] {
        let (scheme, _) = position_scheme(n);
        group.bench_with_input(BenchmarkId::new("extract_povm", n), &n, |b, _| {
            b.iter(|| extract_povm(&scheme, n).unwrap())
        });
    }
    group.finish();
}

fn bench_discrete(c: &mut Criterion) {
    let mut group = c.benchmark_group("discrete");
    for n_probe in [128usize, 256] {
        let (scheme, _, psi) = discrete_scheme(n_probe);
        group.bench_with_input(
            BenchmarkId::new("repeatability", n_probe),
            &n_probe,
            |b, _| b.iter(|| repeatability_check(&scheme, &psi).unwrap()),
        );
    }
    group.finish();
}

fn bench_joint(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint");
    group.sample_size(20);
    for n in [32usize, 48, 64] {
        let (scheme, psi) = joint_scheme(n);
        group.bench_with_input(BenchmarkId::new("evolve", n), &n, |b, _| {
            b.iter(|| evolve_joint(&scheme, &psi).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("distribution", n), &n, |b, _| {
            b.iter(|| joint_distribution(&scheme, &psi).unwrap())
        });
    }
    let (scheme, _) = joint_scheme(64);
    group.bench_function("variance_budget", |b| {
        b.iter(|| variance_budget(&scheme).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_two_body, bench_discrete, bench_joint);
criterion_main!(benches);
