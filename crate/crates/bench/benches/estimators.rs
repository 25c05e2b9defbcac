use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mixcoef::{
    bilinear_sup_exact, bilinear_sup_heuristic, dense_enumeration, estimate_pair,
    exact_level_coefficients, run_strong, MixingKind, ParameterSchedule, RunOptions, SolverConfig,
};
use mixcoef_bench::{chain_matrix, chain_sample, sticky_chain};

fn estimates(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_pair");
    let x = chain_sample(200_000, 3);
    for (n, level) in [(3, 1), (4, 2), (6, 1)] {
        group.bench_with_input(BenchmarkId::new("n_level", format!("{n}_{level}")), &(n, level), |b, &(n, level)| {
            b.iter(|| estimate_pair(&x, 20_000, n, level, 1, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("bilinear_sup");
    for (j, level) in [(2, 1), (3, 1), (2, 2)] {
        let d = chain_matrix(20_000, j + 3, j, level);
        let id = format!("{}x{}", d.rows(), d.cols());
        group.bench_with_input(BenchmarkId::new("exact", &id), &d, |b, d| {
            b.iter(|| bilinear_sup_exact(black_box(d)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("heuristic", &id), &d, |b, d| {
            b.iter(|| bilinear_sup_heuristic(black_box(d), 32, 0))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let chain = sticky_chain();
    c.bench_function("exact_level_coefficients/n5_l1_m1", |b| {
        b.iter(|| exact_level_coefficients(black_box(&chain), 5, 1, 1).unwrap())
    });
}

fn sequential(c: &mut Criterion) {
    c.bench_function("dense_enumeration/1000", |b| b.iter(|| dense_enumeration(black_box(1000))));
    let x = chain_sample(40_000, 5);
    let schedule = ParameterSchedule::default();
    let opts = RunOptions::practical(MixingKind::Alpha, 5_000);
    c.bench_function("run_strong/horizon20", |b| {
        b.iter(|| run_strong(&x, &schedule, 20, &opts).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = estimates, solvers, oracle, sequential
}
criterion_main!(benches);
