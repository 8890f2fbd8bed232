//! Sequential versus rayon execution of the Monte Carlo workloads.
//!
//! Both modes produce identical results; only wall time differs. Build with
//! `--no-default-features` to confirm that `Parallel` falls back to the
//! sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gigalink::rs;
use gigalink::sync::simulate_single_miss;
use gigalink::{run_link, ChannelModel, Execution, ExperimentConfig, FrameKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn mode_name(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn link(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_link");
    g.sample_size(10);
    for kind in FrameKind::ALL {
        let frames = 256;
        g.throughput(Throughput::Bytes(frames * kind.frame_bytes() as u64));
        for exec in MODES {
            let mut cfg =
                ExperimentConfig::new(kind, ChannelModel::Awgn { ebn0_db: 7.0 }, frames, 1);
            cfg.execution = exec;
            g.bench_with_input(BenchmarkId::new(mode_name(exec), kind), &cfg, |b, cfg| {
                b.iter(|| run_link(black_box(cfg)).unwrap())
            });
        }
    }
    g.finish();
}

fn sync_miss(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_single_miss");
    g.sample_size(10);
    let trials = 200_000;
    g.throughput(Throughput::Elements(trials));
    for exec in MODES {
        g.bench_function(mode_name(exec), |b| {
            b.iter(|| {
                simulate_single_miss(FrameKind::P32, 28, 0.05, black_box(trials), 9, exec).unwrap()
            })
        });
    }
    g.finish();
}

fn rs_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words: Vec<[u8; rs::N]> = (0..512)
        .map(|_| {
            let msg: Vec<u8> = (0..rs::K).map(|_| rng.random()).collect();
            let mut w = rs::encode(&msg).unwrap().0;
            for _ in 0..rs::T {
                let pos = rng.random_range(0..rs::N);
                w[pos] ^= rng.random_range(1..=255u8);
            }
            w
        })
        .collect();
    let mut g = c.benchmark_group("rs_decode_batch");
    g.throughput(Throughput::Elements(words.len() as u64));
    for exec in MODES {
        g.bench_function(mode_name(exec), |b| {
            b.iter(|| exec.map_slice(black_box(&words), |w| rs::decode(w).map(|d| d.corrected)))
        });
    }
    g.finish();
}

criterion_group!(benches, link, sync_miss, rs_batch);
criterion_main!(benches);
