// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dmm_core::field::FieldSpec;
use dmm_core::simulator::{
    run_training, AdversarySpec, FactorizationSource, Layout, MeanEstimation, Mode, SimConfig,
};

fn config(n: usize, t_c: usize, t_d: usize, dimension: usize, mode: Mode) -> SimConfig {
    SimConfig {
        n,
        t_c,
        t_d,
        mu: 1.0 / 6.0,
        k: None,
        iterations: 16,
        dimension,
        field: FieldSpec::default(),
        clip_norm: 1.0,
        granularity: 0.01,
        rounding_bias: 0.01,
        flatten_seed: 1,
        sigma: 0.05,
        factorization: FactorizationSource::Honaker,
        min_sep: 1,
        mode,
        fixed_point_bits: 0,
        seed: 1,
        universe: None,
        dropouts: vec![],
        random_dropouts: None,
        adversary: AdversarySpec::default(),
    }
}

fn training(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_training_16_iterations");
    g.sample_size(10);
    for (name, cfg) in [
        ("n16_d1024_optimized", config(16, 3, 2, 1024, Mode::Optimized)),
        ("n16_d1024_full", config(16, 3, 2, 1024, Mode::Full)),
        ("n64_d4096_optimized", config(64, 10, 10, 4096, Mode::Optimized)),
    ] {
        let layout = Layout::new(cfg).unwrap();
        let d = layout.cfg.dimension;
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut p = MeanEstimation {
                    center: vec![0.01; d],
                    spread: 0.01,
                    seed: 2,
                };
                run_training(layout.clone(), &mut p, None).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, training);
criterion_main!(benches);
