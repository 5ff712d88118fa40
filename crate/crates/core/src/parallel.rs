//! Deterministic replicate-level parallelism.
//!
//! Every replicate owns its random stream, and results are collected in
//! replicate order, so output does not depend on the worker count.

use rayon::prelude::*;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "HEATVAR_WORKERS";

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

/// Evaluates `f(r)` for `r = 0..m` and returns the results in order.
///
/// `workers = None` uses the environment override or rayon's default pool.
pub fn map_replicates<T, F>(m: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let workers = workers.or_else(workers_from_env);
    if workers == Some(1) || m <= 1 {
        return (0..m as u64).map(&f).collect();
    }
    let run = || (0..m as u64).into_par_iter().map(&f).collect::<Vec<T>>();
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a {w}-thread pool ({e}); using the global pool");
                run()
            }
        },
        None => run(),
    }
}

/// Fallible variant of [`map_replicates`]; returns the error of the lowest
/// failing replicate.
pub fn try_map_replicates<T, E, F>(m: usize, workers: Option<usize>, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    map_replicates(m, workers, f).into_iter().collect()
}
