//! Batch execution over independent work items.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon pool; without it every batch runs sequentially. Results are always
//! returned in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `op` with at most `jobs` worker threads. `jobs == 1` forces the
/// sequential path.
pub fn with_jobs<T, F>(jobs: usize, op: F) -> T
where
    T: Send,
    F: FnOnce(Execution) -> T + Send,
{
    if jobs <= 1 {
        return op(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| op(Execution::Parallel)),
            Err(_) => op(Execution::Parallel),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        op(Execution::Sequential)
    }
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
