use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trajlab::gits::{build_cost_matrix, build_teacher, dp_schedule};
use trajlab::rng::{initial_noise, Purpose};
use trajlab::schedule::polynomial_schedule;
use trajlab::solvers::sample;
use trajlab::synthetic::{gmm, GmmParams};
use trajlab::{CostMatrix, Denoiser, FineGrid, OptimalDenoiser, SolverSpec};

fn denoiser(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimal_denoise");
    for dim in [2, 64, 1024] {
        let den = OptimalDenoiser::new(gmm(&GmmParams::new(2, dim), 1).unwrap());
        let x = initial_noise(1, Purpose::Evaluation, 0, dim, 1.0);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| den.denoise(black_box(&x), 1.0).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let den = OptimalDenoiser::new(gmm(&GmmParams::new(2, 64), 1).unwrap());
    let sched = polynomial_schedule(10, 0.002, 80.0, 7.0).unwrap();
    let x = initial_noise(1, Purpose::InitialNoise, 0, 64, 80.0);
    let mut g = c.benchmark_group("sample_nfe10_d64");
    for spec in [SolverSpec::euler(), SolverSpec::new(trajlab::Method::Heun), SolverSpec::ipndm(4)] {
        g.bench_function(spec.method.to_string(), |b| b.iter(|| sample(&spec, &den, &sched, black_box(&x)).unwrap()));
    }
    g.finish();
}

fn cost_matrix(c: &mut Criterion) {
    let den = OptimalDenoiser::new(gmm(&GmmParams::new(2, 64), 1).unwrap());
    let fine = FineGrid::polynomial(60, 0.002, 80.0).unwrap();
    let warm: Vec<_> = (0..16).map(|k| initial_noise(1, Purpose::Warmup, k, 64, 80.0)).collect();
    let teachers = build_teacher(&fine, &den, &warm).unwrap();
    c.bench_function("teacher_60x16_d64", |b| b.iter(|| build_teacher(&fine, &den, black_box(&warm)).unwrap()));
    c.bench_function("cost_matrix_61_d64", |b| {
        b.iter(|| build_cost_matrix(&fine, &den, black_box(&teachers)).unwrap())
    });
}

fn dynamic_program(c: &mut Criterion) {
    let times: Vec<f64> = (0..61).map(|i| 80.0 - i as f64).collect();
    let costs = CostMatrix::from_fn(times, 1, |i, j| ((j - i) as f64).powi(2) / (1.0 + i as f64)).unwrap();
    c.bench_function("dp_61_nodes_budget10", |b| b.iter(|| dp_schedule(black_box(&costs), 10, 1.15).unwrap()));
}

criterion_group!(benches, denoiser, sampling, cost_matrix, dynamic_program);
criterion_main!(benches);
