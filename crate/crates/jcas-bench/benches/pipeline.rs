//! Hot-path benchmarks: channel generation, the MPC distance metric, one
//! clustering run, and the full order-selection pipeline.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use jcas_core::clustering::{
    kpowermeans_best_of, mcd, prepare_joint, run_kpm_jca, KpmJcaConfig, McdParams, DEFAULT_ZETA,
};
use jcas_core::config::ScenarioConfig;
use jcas_core::model::generate_channel_pair;
use jcas_core::types::ChannelPair;

fn small_pair() -> ChannelPair {
    let mut cfg = ScenarioConfig::default();
    cfg.n0 = 3;
    cfg.n1 = 1;
    cfg.n2 = 2;
    cfg.seed = 77;
    generate_channel_pair(&cfg).unwrap().0
}

fn bench_generate(c: &mut Criterion) {
    let cfg = ScenarioConfig::default();
    c.bench_function("generate_default_realization", |b| {
        b.iter(|| generate_channel_pair(&cfg).unwrap())
    });
}

fn bench_mcd(c: &mut Criterion) {
    let pair = small_pair();
    let mpcs = &pair.sensing_mpcs;
    let params = McdParams::from_mpcs(mpcs, DEFAULT_ZETA);
    c.bench_function("mcd_all_pairs", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for a in mpcs {
                for other in mpcs {
                    acc += mcd(a, other, &params);
                }
            }
            acc
        })
    });
}

fn bench_kpowermeans(c: &mut Criterion) {
    let pair = small_pair();
    let cfg = KpmJcaConfig::default();
    let joint = prepare_joint(&pair, &cfg).unwrap();
    let params = McdParams::from_mpcs(&joint.mpcs, cfg.zeta);
    c.bench_function("kpowermeans_k6_10_restarts", |b| {
        b.iter(|| kpowermeans_best_of(&joint, 6, &params, 0, &[], 10, 100).unwrap())
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let pair = small_pair();
    let cfg = KpmJcaConfig {
        k_min: 2,
        k_max: 10,
        ..KpmJcaConfig::default()
    };
    c.bench_function("pipeline_order_selection_2_10", |b| {
        b.iter_batched(
            || pair.clone(),
            |p| run_kpm_jca(std::slice::from_ref(&p), &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_generate,
    bench_mcd,
    bench_kpowermeans,
    bench_pipeline
);
criterion_main!(benches);
