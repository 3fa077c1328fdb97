use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvperf_core::dual::{build_omegas, solve_simplex_qp, ViewSubproblem};
use mvperf_core::{generate, most_violated, train, GenSpec, Measure, TrainConfig};

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("most_violated");
    for n in [100, 1_000, 10_000] {
        let ds = generate(&GenSpec::uniform(n, vec![10, 10], 1.0, 1.0, 1)).unwrap();
        let (model, _) = train(&ds, &TrainConfig { max_iter: 3, ..TrainConfig::default() }).unwrap();
        for measure in [Measure::ErrorRate, Measure::F1, Measure::Prbep] {
            group.bench_with_input(BenchmarkId::new(measure.to_string(), n), &n, |b, _| {
                b.iter(|| most_violated(&ds, black_box(&model.weights), measure, ds.labels()).unwrap())
            });
        }
    }
    group.finish();
}

fn qp(c: &mut Criterion) {
    let ds = generate(&GenSpec::uniform(200, vec![20, 20], 0.5, 1.5, 2)).unwrap();
    let cfg = TrainConfig { c1: 10.0, c2: 0.5, max_iter: 40, ..TrainConfig::default() };
    let (_, state) = train(&ds, &cfg).unwrap();
    let omegas = build_omegas(&ds, cfg.c2).unwrap();
    let sub = ViewSubproblem::build(&ds, 0, &state.weights, &state.working_set, cfg.c2, &omegas[0]).unwrap();
    c.bench_function(&format!("view_qp/{}_constraints", sub.len()), |b| {
        b.iter(|| solve_simplex_qp(black_box(&sub), cfg.c1, 1e-8, 10_000, None).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for n in [200, 1_000] {
        let ds = generate(&GenSpec::uniform(n, vec![10, 5], 1.0, 1.0, 3)).unwrap();
        let cfg = TrainConfig { c1: 10.0, c2: 0.5, max_iter: 100, epsilon: 1e-3, measure: Measure::F1, ..TrainConfig::default() };
        group.bench_with_input(BenchmarkId::new("f1", n), &n, |b, _| b.iter(|| train(black_box(&ds), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, search, qp, training);
criterion_main!(benches);
