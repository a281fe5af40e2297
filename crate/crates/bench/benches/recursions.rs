// SPDX-License-Identifier: MIT OR Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cpfilter_bench::{lambda_phage, shifted_series};
use cpfilter_core::gmrf::{GmrfSegmentModel, GammaPrior, HyperRule, LatentKind, LatentSpec, NormalPrior, ObsSpec};
use cpfilter_core::recursions::{backward_recursions, log_marginals, map_positions, SegmentTable};
use cpfilter_core::segmodels::{GaussianConjugate, MultinomialDirichlet, NormalInverseGamma, SegmentMarginal};
use cpfilter_core::ReducedGrid;

fn dna(c: &mut Criterion) {
    let Some(seq) = lambda_phage() else {
        eprintln!("lambda phage data missing, skipping DNA benchmarks");
        return;
    };
    let model = MultinomialDirichlet::new(&seq, 1.0).unwrap();
    let mut group = c.benchmark_group("dna");
    group.sample_size(10);
    for g in [25, 50] {
        let grid = ReducedGrid::new(model.len(), g).unwrap();
        group.bench_with_input(BenchmarkId::new("table_fill", g), &grid, |b, grid| {
            b.iter(|| SegmentTable::fill(&model, grid, 1).unwrap())
        });
        let table = SegmentTable::fill(&model, &grid, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("backward_k20", g), &table, |b, table| {
            b.iter(|| {
                let rec = backward_recursions(table, 20);
                black_box(log_marginals(&rec, table))
            })
        });
        let rec = backward_recursions(&table, 20);
        group.bench_with_input(BenchmarkId::new("map_k10", g), &table, |b, table| {
            b.iter(|| map_positions(&rec, table, 10).unwrap())
        });
    }
    group.finish();
}

fn gaussian(c: &mut Criterion) {
    let y = shifted_series(2000, 1);
    let model = GaussianConjugate::new(&y, NormalInverseGamma::default()).unwrap();
    let mut group = c.benchmark_group("gaussian_n2000");
    for g in [1, 5, 10] {
        let grid = ReducedGrid::new(y.len(), g).unwrap();
        group.bench_with_input(BenchmarkId::new("fill_and_recurse", g), &grid, |b, grid| {
            b.iter(|| {
                let table = SegmentTable::fill(&model, grid, 1).unwrap();
                let rec = backward_recursions(&table, 10);
                black_box(log_marginals(&rec, &table))
            })
        });
    }
    group.finish();
}

fn gmrf_segment(c: &mut Criterion) {
    let y: Vec<f64> = shifted_series(200, 2).iter().map(|v| (v + 3.0).round().max(0.0)).collect();
    let latent = LatentSpec {
        kind: LatentKind::Ar1 {
            kappa_prior: NormalPrior { mean: 3.0, sd: 1.89 },
            precision_prior: GammaPrior { shape: 4.0, rate: 0.01 },
        },
        intercept: Some(NormalPrior { mean: 0.0, sd: 10.0 }),
    };
    let model = GmrfSegmentModel::new(y, latent, ObsSpec::PoissonLog, HyperRule::default()).unwrap();
    let mut group = c.benchmark_group("gmrf_poisson_ar1");
    group.sample_size(10);
    for len in [50, 200] {
        group.bench_with_input(BenchmarkId::new("segment_9x9", len), &len, |b, &len| {
            b.iter(|| model.log_marginal(1, len).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dna, gaussian, gmrf_segment);
criterion_main!(benches);
