use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mpe_bench::{discrete_pair, gaussian_pair, paired_errors};
use mpe_core::classifier::fit;
use mpe_core::estimators::{km_estimate, roc_estimate, KmConfig, RocConfig};
use mpe_core::harness::{wilcoxon_signed_rank_with, WilcoxonMode};
use mpe_core::measure::kappa_max;
use mpe_core::regrouping::{build_h_tilde_with_model, fit_scorer};
use mpe_core::TrainConfig;

fn config() -> Criterion {
    Criterion::default()
        .without_plots()
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(5))
        .sample_size(20)
}

fn bench_kappa_max(c: &mut Criterion) {
    let mut group = c.benchmark_group("kappa_max");
    for n in [10usize, 1_000, 100_000] {
        let (f, h) = discrete_pair(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(f, h), |b, (f, h)| {
            b.iter(|| kappa_max(black_box(f), black_box(h)).unwrap())
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let pair = gaussian_pair(400, 10, 2);
    let cfg = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    c.bench_function("fit/400x10/20_epochs", |b| {
        b.iter(|| fit(black_box(&pair.x_f), black_box(&pair.x_h), &cfg).unwrap())
    });
}

fn bench_estimators(c: &mut Criterion) {
    let pair = gaussian_pair(400, 10, 3);
    let model = fit_scorer(&pair.x_f, &pair.x_h, &TrainConfig::default()).unwrap();
    c.bench_function("roc_estimate/400", |b| {
        b.iter(|| roc_estimate(&pair.x_f, &pair.x_h, &model, &RocConfig::default()).unwrap())
    });
    c.bench_function("regroup/400/p=0.1", |b| {
        b.iter(|| build_h_tilde_with_model(&pair.x_f, &pair.x_h, &model, 0.1).unwrap())
    });
    let mut group = c.benchmark_group("km_estimate");
    for n in [100usize, 200] {
        let pair = gaussian_pair(n, 10, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &pair, |b, pair| {
            b.iter(|| km_estimate(&pair.x_f, &pair.x_h, &KmConfig::km2()).unwrap())
        });
    }
    group.finish();
}

fn bench_wilcoxon(c: &mut Criterion) {
    let mut group = c.benchmark_group("wilcoxon");
    for (n, mode) in [
        (20usize, WilcoxonMode::Exact),
        (60, WilcoxonMode::Exact),
        (60, WilcoxonMode::Normal),
    ] {
        let (a, bv) = paired_errors(n, 5);
        group.bench_function(format!("{n}/{mode:?}"), |b| {
            b.iter(|| wilcoxon_signed_rank_with(black_box(&a), black_box(&bv), mode).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = config();
    targets = bench_kappa_max, bench_fit, bench_estimators, bench_wilcoxon
}
criterion_main!(benches);
