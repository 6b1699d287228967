//! Compares a batch of independent scenario runs dispatched across the
//! rayon pool against the same batch run sequentially. Each run is itself
//! single-threaded, so the speedup comes purely from run-level parallelism.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use abrsim::experiments::{run_batch, run_batch_sequential, LinkSpec, ScenarioConfig};
use abrsim::SimTime;

fn bench_configs() -> Vec<ScenarioConfig> {
    // Short LAN runs: enough simulated traffic to be representative without
    // making each criterion sample take seconds.
    (0..8)
        .map(|i| ScenarioConfig {
            name: format!("bench_{i}"),
            n_sources: 5,
            link_km: LinkSpec::Uniform(50.0),
            duration: SimTime::from_ms(40),
            warmup: Some(SimTime::from_ms(10)),
            ..ScenarioConfig::default()
        })
        .collect()
}

fn sweep_benches(c: &mut Criterion) {
    let cfgs = bench_configs();
    let mut group = c.benchmark_group("sweep8x40ms");
    group.sample_size(10);

    group.bench_function("sequential", |b| {
        b.iter(|| run_batch_sequential(black_box(&cfgs)).unwrap())
    });

    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| run_batch(black_box(&cfgs)).unwrap())
    });

    #[cfg(not(feature = "parallel"))]
    let _ = run_batch(&cfgs); // same path as sequential without the feature

    group.finish();
}

criterion_group!(benches, sweep_benches);
criterion_main!(benches);
