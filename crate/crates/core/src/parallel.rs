//! Thread pool for per-row scoring, sized by `SKETCH_ANOMALY_THREADS`.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

pub const THREADS_ENV: &str = "SKETCH_ANOMALY_THREADS";

/// Rows handed to a worker at once.
const CHUNK: usize = 256;

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("sketch-anomaly-{i}"))
            .build()
            .expect("failed to build thread pool")
    })
}

/// Maps `f` over `0..n` in parallel; the output keeps index order.
pub fn map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    if n <= CHUNK {
        return (0..n).map(f).collect();
    }
    pool().install(|| (0..n).into_par_iter().with_min_len(CHUNK).map(&f).collect())
}
