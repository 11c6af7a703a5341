//! Bounded parallel job runner with deterministic, key-ordered results.

use std::collections::BTreeMap;

use rayon::prelude::*;

/// Runs `jobs` on a pool of at most `threads` workers (0 uses the rayon
/// default) and returns the results ordered by key.
pub fn run_jobs<K, T, F>(jobs: Vec<(K, F)>, threads: usize) -> BTreeMap<K, T>
where
    K: Ord + Send,
    T: Send,
    F: FnOnce() -> T + Send,
{
    let run = move || jobs.into_par_iter().map(|(k, f)| (k, f())).collect::<Vec<_>>();
    let results = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    results.into_iter().collect()
}

/// Worker count from the environment-independent default.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_keyed_and_complete() {
        let jobs: Vec<(usize, _)> = (0..20).rev().map(|k| (k, move || k * k)).collect();
        let out = run_jobs(jobs, 3);
        assert_eq!(out.len(), 20);
        for (k, v) in &out {
            assert_eq!(*v, k * k);
        }
        assert_eq!(out.keys().cloned().collect::<Vec<_>>(), (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn single_thread_is_deterministic() {
        let a = run_jobs((0..5).map(|k| (k, move || k as f64 * 0.5)).collect(), 1);
        let b = run_jobs((0..5).map(|k| (k, move || k as f64 * 0.5)).collect(), 4);
        assert_eq!(a, b);
    }
}
