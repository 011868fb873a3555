use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multdim::constraints::count_prefixes_with_split;
use multdim::{count_prefixes, count_prefixes_triangle};
use multdim_bench::x23;

fn methods(c: &mut Criterion) {
    let spec = x23(31);
    let mut group = c.benchmark_group("count_x23");
    for depth in [16, 20, 24] {
        group.bench_with_input(BenchmarkId::new("dfs", depth), &depth, |b, &d| {
            b.iter(|| count_prefixes(black_box(&spec), d).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("triangle", depth), &depth, |b, &d| {
            b.iter(|| count_prefixes_triangle(black_box(&spec), d).unwrap())
        });
    }
    group.bench_function("triangle/31", |b| b.iter(|| count_prefixes_triangle(black_box(&spec), 31).unwrap()));
    group.finish();
}

fn split_depth(c: &mut Criterion) {
    let spec = x23(22);
    let mut group = c.benchmark_group("dfs_split");
    for split in [0, 4, 8, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(split), &split, |b, &s| {
            b.iter(|| count_prefixes_with_split(black_box(&spec), 22, s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, methods, split_depth);
criterion_main!(benches);
