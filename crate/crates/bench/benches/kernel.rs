use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use miniform::{Config, RunOptions};
use miniform_bench::{bracket_lookups, determinant, expansion, run, stuffle};

fn sorting(c: &mut Criterion) {
    let src = expansion(6, 8);
    let mut g = c.benchmark_group("expansion");
    for cap in [Some(256), None] {
        let opts = RunOptions { engine: Config { sort_capacity: cap, ..Config::default() }, ..RunOptions::default() };
        let name = cap.map_or("unbounded".to_string(), |c| format!("capacity {c}"));
        g.bench_function(name, |b| b.iter(|| run(black_box(&src), &opts)));
    }
    g.finish();
}

fn programs(c: &mut Criterion) {
    let opts = RunOptions::default();
    let det = determinant(5);
    c.bench_function("determinant 5x5", |b| b.iter(|| run(black_box(&det), &opts)));
    let basis = stuffle(&[2, 3], &[-1, 2]);
    c.bench_function("basis S(2,3)*S(-1,2)", |b| b.iter(|| run(black_box(&basis), &opts)));
}

fn lookups(c: &mut Criterion) {
    let opts = RunOptions::default();
    let mut g = c.benchmark_group("bracket lookup");
    for indexed in [true, false] {
        let src = bracket_lookups(8, indexed);
        g.bench_function(if indexed { "indexed" } else { "linear" }, |b| b.iter(|| run(black_box(&src), &opts)));
    }
    g.finish();
}

criterion_group!(benches, sorting, programs, lookups);
criterion_main!(benches);
