use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use threeyes_bench::{campaign, units};
use threeyes_core::analytics::{campaign_stats, krippendorff_alpha_ordinal, TierFilter};
use threeyes_core::synth::{generate_venue, GeneratorConfig};
use threeyes_core::workflow::run_workflow;

fn alpha(c: &mut Criterion) {
    let mut group = c.benchmark_group("krippendorff_alpha");
    for n in [100, 1000, 3591] {
        let u = units(&campaign(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| krippendorff_alpha_ordinal(black_box(u)))
        });
    }
    group.finish();
}

fn workflow(c: &mut Criterion) {
    let s = campaign(3591);
    c.bench_function("run_workflow/3591", |b| b.iter(|| run_workflow(black_box(&s)).unwrap()));
    let a = run_workflow(&s).unwrap();
    c.bench_function("campaign_stats/3591", |b| b.iter(|| campaign_stats(black_box(&s), &a, &TierFilter::ALL)));
}

fn generator(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_venue");
    group.sample_size(10);
    for n in [500, 3591] {
        let cfg =
            GeneratorConfig { n_submissions: n, reviewer_pool_size: n * 4421 / 3591, ..GeneratorConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| b.iter(|| generate_venue(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, alpha, workflow, generator);
criterion_main!(benches);
