//! Compares the rayon-backed replica map against the sequential fallback on a
//! realistic batch of Langevin runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use langmeta::dynamics::{run_discrete_langevin, Beta, LangevinConfig};
use langmeta::exec::{map_replicas, map_replicas_seq};
use langmeta::landscape::build_double_well;
use langmeta::rng::derive_replica_seed;

fn run_batch(parallel: bool, replicas: usize) -> f64 {
    let f = build_double_well(4, 1.0).unwrap();
    let job = |i: usize| {
        let cfg = LangevinConfig {
            eta: 0.01,
            beta: Beta::Finite(8.0),
            horizon_k: 2_000,
            initial_point: vec![1.0, 0.0, 0.0, 0.0],
            seed: derive_replica_seed(0xBEEF, i as u64),
        };
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        traj.points.last().unwrap().norm()
    };
    let out = if parallel {
        map_replicas(replicas, job)
    } else {
        map_replicas_seq(replicas, job)
    };
    out.iter().sum()
}

fn bench_replica_batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("replica_batch");
    group.sample_size(10);
    for replicas in [16usize, 64] {
        group.bench_with_input(
            BenchmarkId::new("parallel", replicas),
            &replicas,
            |b, &n| b.iter(|| run_batch(true, n)),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", replicas),
            &replicas,
            |b, &n| b.iter(|| run_batch(false, n)),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_replica_batches);
criterion_main!(benches);
