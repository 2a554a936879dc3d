//! Parallel vs sequential trajectory ensembles, and the cost of one exact
//! density evaluation.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dysonwall::determinantal::q_density;
use dysonwall::ensemble::{run, run_seq, trajectory_rng};
use dysonwall::grid::{sample_lattice, TimeGrid};
use dysonwall::reflecting_sim::{running_max, z_process};

fn sup_top(seed: u64, idx: u64, n: usize, steps: usize) -> f64 {
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let lat = sample_lattice(grid, n, &mut trajectory_rng(seed, idx));
    running_max(&z_process(&lat), n - 1).unwrap()
}

fn bench_ensembles(c: &mut Criterion) {
    let mut group = c.benchmark_group("stack_ensemble");
    for &(n, steps, trajectories) in &[(3usize, 512usize, 256u64), (2, 2048, 128)] {
        let label = format!("n{n}_steps{steps}_traj{trajectories}");
        group.bench_with_input(
            BenchmarkId::new("sequential", &label),
            &(n, steps, trajectories),
            |b, &(n, steps, trajectories)| {
                b.iter(|| {
                    black_box(run_seq(trajectories, |i| sup_top(7, i, n, steps)));
                })
            },
        );
        #[cfg(feature = "parallel")]
        group.bench_with_input(
            BenchmarkId::new("parallel", &label),
            &(n, steps, trajectories),
            |b, &(n, steps, trajectories)| {
                b.iter(|| {
                    black_box(run(trajectories, |i| sup_top(7, i, n, steps)));
                })
            },
        );
    }
    group.finish();
}

fn bench_density(c: &mut Criterion) {
    c.bench_function("q_density_n4", |b| {
        let y = [0.2, 0.7, 1.4, 2.2];
        let y2 = [0.4, 1.0, 1.6, 2.5];
        b.iter(|| black_box(q_density(1.0, &y, &y2).unwrap()))
    });
}

criterion_group!(benches, bench_ensembles, bench_density);
criterion_main!(benches);
