//! Reproducible trajectory-level parallelism.
//!
//! Every trajectory draws from its own counter-derived stream, so ensembles
//! are identical whatever the worker count or execution order. The `parallel`
//! feature (on by default) runs trajectories on the rayon pool; without it
//! the same API runs sequentially.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Independent reproducible stream for one trajectory: the master seed keys
/// the cipher, the trajectory index selects the stream.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Map a closure over trajectory indices, in parallel when the `parallel`
/// feature is enabled. Output order matches index order either way.
pub fn run<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sequential twin of [`run`], kept available under every feature set for
/// determinism checks and benchmarks.
pub fn run_seq<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

/// Pin the global worker count. Results never depend on it; only wall-clock
/// time does. Without the `parallel` feature this is a no-op.
#[cfg(feature = "parallel")]
pub fn configure_workers(count: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_workers(_count: usize) -> std::result::Result<(), String> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw(seed: u64, idx: u64) -> f64 {
        trajectory_rng(seed, idx).random::<f64>()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draw(3, 5), draw(3, 5));
        assert_ne!(draw(3, 5), draw(3, 6));
        assert_ne!(draw(3, 5), draw(4, 5));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let par = run(64, |i| draw(11, i));
        let seq = run_seq(64, |i| draw(11, i));
        assert_eq!(par, seq);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn result_is_invariant_to_worker_count() {
        let baseline = run_seq(128, |i| draw(2, i));
        for workers in [1usize, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let got = pool.install(|| run(128, |i| draw(2, i)));
            assert_eq!(got, baseline, "workers = {workers}");
        }
    }
}
