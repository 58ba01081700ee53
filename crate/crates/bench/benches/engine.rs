use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use omega_bench::{blobs, probabilities, table};
use omega_core::ensemble::{allocate, run_ensemble, EnsembleConfig};
use omega_core::kernel::enumerate_programs;
use omega_core::memory::MemoryStore;
use omega_core::sdl::{parse_sdl, serialize_sdl};
use omega_core::solvers::{builtin_registry, fit_kmeans};
use omega_core::task::{TaskKind, TaskSpec};

fn bench_allocate(c: &mut Criterion) {
    let probs = probabilities(32, 1);
    c.bench_function("allocate_32", |b| b.iter(|| allocate(black_box(10_000), &probs, 50).unwrap()));
}

fn bench_enumerate(c: &mut Criterion) {
    c.bench_function("enumerate_arity1_size5", |b| b.iter(|| enumerate_programs(1, black_box(5)).count()));
}

fn bench_kmeans(c: &mut Criterion) {
    let points = blobs(500, 4, 2);
    c.bench_function("kmeans_500x4", |b| b.iter(|| fit_kmeans(black_box(&points), 4, 7, 100).unwrap().sse));
}

fn bench_sdl(c: &mut Criterion) {
    let d = table(1000, 3);
    let text = serialize_sdl(&d);
    c.bench_function("sdl_serialize_1000", |b| b.iter(|| serialize_sdl(black_box(&d))));
    c.bench_function("sdl_parse_1000", |b| b.iter(|| parse_sdl(black_box(&text)).unwrap()));
}

fn bench_ensemble(c: &mut Criterion) {
    let d = Arc::new(table(200, 4));
    let task = TaskSpec::new(TaskKind::Classify, vec!["label".into()], 2000, 5);
    let registry = builtin_registry();
    let mem = MemoryStore::new();
    let cfg = EnsembleConfig {
        rounds: 1,
        ..EnsembleConfig::default()
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("classify_200", |b| {
        b.iter(|| run_ensemble(d.clone(), &task, &registry, &mem, &cfg).unwrap().best.score)
    });
    group.finish();
}

criterion_group!(benches, bench_allocate, bench_enumerate, bench_kmeans, bench_sdl, bench_ensemble);
criterion_main!(benches);
