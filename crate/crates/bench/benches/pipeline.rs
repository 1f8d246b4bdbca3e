use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use honor_bench::{block_model, random_matrix};
use honor_core::objectives::total_loss_with_grad;
use honor_core::spectral::second_eigenpair;
use honor_core::{heterophily_report, train, BipartiteExpansion, LossWeights, PairNormalizer, TrainConfig};

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("highpass");
    for n in [200, 1000, 4000] {
        let hg = block_model(n, 8);
        let exp = BipartiteExpansion::new(&hg);
        let x = random_matrix(exp.num_vertices(), 64, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| exp.highpass(black_box(x.view()), 0.5))
        });
    }
    group.finish();
}

fn loss(c: &mut Criterion) {
    let mut group = c.benchmark_group("total_loss_with_grad");
    let weights = LossWeights { tau: 0.5, lambda1: 1e-4, lambda2: 1e-5, lambda3: 1.0 };
    for n in [100, 400] {
        let hg = block_model(n, 8);
        let memberships = hg.memberships();
        let rows = hg.num_entities();
        let z1 = random_matrix(rows, 64, 2);
        let z2 = random_matrix(rows, 64, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| total_loss_with_grad(z1.view(), z2.view(), n, black_box(&memberships), &weights).unwrap())
        });
    }
    group.finish();
}

fn training_epoch(c: &mut Criterion) {
    let hg = block_model(200, 8);
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    c.bench_function("train_one_epoch_n200", |b| b.iter(|| train(black_box(&hg), &cfg).unwrap()));
}

fn analysis(c: &mut Criterion) {
    let hg = block_model(1000, 4);
    c.bench_function("heterophily_report_n1000", |b| {
        b.iter(|| heterophily_report(black_box(&hg), PairNormalizer::Ordered).unwrap())
    });
    let exp = BipartiteExpansion::new(&block_model(400, 4));
    c.bench_function("second_eigenpair_n400", |b| b.iter(|| second_eigenpair(black_box(&exp))));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = propagation, loss, training_epoch, analysis
}
criterion_main!(benches);
