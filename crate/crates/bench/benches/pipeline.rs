//! Benchmarks along the main pipeline: grid evaluation, state enumeration,
//! path enumeration, index arithmetic, and both decomposition routes.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use kdclass::decompose::{lp_membership, sweep_decompose, DecomposeOptions};
use kdclass::graph::{path_state_union, DivisorGraph};
use kdclass::hilbert::{kd_distribution, DftPair, HermitianOperator};
use kdclass::numtheory::{DimensionProfile, DivisorSplit};
use kdclass::purestates::enumerate_all;
use kdclass::sampling::{convex_mixture, seeded_rng};

fn bench_kd_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("kd_distribution");
    for d in [16u64, 64, 128] {
        let profile = DimensionProfile::factorize(d).unwrap();
        let pair = DftPair::new(d).unwrap();
        let states = enumerate_all(&profile, &pair).unwrap();
        let mixture = convex_mixture(&mut seeded_rng(d), &states);
        let f = HermitianOperator::new(mixture, 1e-9).unwrap();
        group.bench_function(format!("d{d}"), |b| {
            b.iter(|| kd_distribution(black_box(&f), &pair, 1e-9).unwrap())
        });
    }
    group.finish();
}

fn bench_enumerate_states(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_all");
    for d in [36u64, 120] {
        let profile = DimensionProfile::factorize(d).unwrap();
        let pair = DftPair::new(d).unwrap();
        group.bench_function(format!("d{d}"), |b| {
            b.iter(|| enumerate_all(black_box(&profile), &pair).unwrap())
        });
    }
    group.finish();
}

fn bench_path_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_paths");
    for (d, x0) in [(108u64, 4u64), (2520, 8)] {
        let profile = DimensionProfile::factorize(d).unwrap();
        let graph = DivisorGraph::build(&profile, x0).unwrap();
        group.bench_function(format!("d{d}_x{x0}"), |b| {
            b.iter(|| black_box(&graph).enumerate_paths().unwrap())
        });
    }
    group.finish();
}

fn bench_index_split(c: &mut Criterion) {
    let profile = DimensionProfile::factorize(5040).unwrap();
    let split = DivisorSplit::new(&profile, 144).unwrap();
    c.bench_function("index_split/d5040_x144", |b| {
        b.iter(|| {
            for i in 0..5040 {
                black_box(split.index_split(&profile, black_box(i)).unwrap());
            }
        })
    });
}

fn bench_sweep_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_decompose");
    group.sample_size(20);
    for (d, x0) in [(6u64, 6u64), (12, 4)] {
        let profile = DimensionProfile::factorize(d).unwrap();
        let pair = DftPair::new(d).unwrap();
        let graph = DivisorGraph::build(&profile, x0).unwrap();
        let path = graph.canonical_path(&profile);
        let states = path_state_union(&profile, &pair, &path).unwrap();
        let opts = DecomposeOptions::default();
        let mut rng = seeded_rng(d * 31 + x0);
        group.bench_function(format!("d{d}_x{x0}"), |b| {
            b.iter_batched(
                || {
                    HermitianOperator::new(convex_mixture(&mut rng, &states), opts.entry_tol)
                        .unwrap()
                },
                |f| sweep_decompose(&profile, &pair, &graph, &path, &f, &opts).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_lp_membership(c: &mut Criterion) {
    let mut group = c.benchmark_group("lp_membership");
    group.sample_size(20);
    for (d, x0) in [(6u64, 6u64), (8, 1)] {
        let profile = DimensionProfile::factorize(d).unwrap();
        let pair = DftPair::new(d).unwrap();
        let graph = DivisorGraph::build(&profile, x0).unwrap();
        let path = graph.canonical_path(&profile);
        let states = path_state_union(&profile, &pair, &path).unwrap();
        let opts = DecomposeOptions::default();
        let mut rng = seeded_rng(d * 37 + x0);
        group.bench_function(format!("d{d}_x{x0}"), |b| {
            b.iter_batched(
                || convex_mixture(&mut rng, &states),
                |f| lp_membership(&f, &states, &opts).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_kd_grid,
    bench_enumerate_states,
    bench_path_enumeration,
    bench_index_split,
    bench_sweep_decompose,
    bench_lp_membership
);
criterion_main!(benches);
