//! Order-stable parallel execution of independent Monte Carlo tasks.
//!
//! Task decomposition is fixed by the experiment configuration, never by the
//! worker count; results come back indexed by task so reductions can run
//! sequentially in task order and stay floating-point deterministic.

use rayon::prelude::*;

/// Number of Monte Carlo units (paths or draws) grouped into one task.
pub const TASK_CHUNK: u64 = 1024;

/// Run `f` over `0..n_tasks` on a private pool of `workers` threads,
/// returning results in task order.
pub fn run_tasks<T, F>(workers: usize, n_tasks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("failed to build worker pool");
    pool.install(|| (0..n_tasks).into_par_iter().map(f).collect())
}

/// Split `n_units` into `TASK_CHUNK`-sized tasks; returns `(n_tasks, last_len)`.
pub fn chunk_tasks(n_units: u64) -> (u64, u64) {
    let n_tasks = n_units.div_ceil(TASK_CHUNK);
    let last = if n_units % TASK_CHUNK == 0 && n_units > 0 {
        TASK_CHUNK
    } else {
        n_units % TASK_CHUNK
    };
    (n_tasks, last)
}

/// Units handled by task `t` out of `n_units` total.
pub fn task_len(t: u64, n_units: u64) -> u64 {
    let (n_tasks, last) = chunk_tasks(n_units);
    if t + 1 == n_tasks {
        last
    } else {
        TASK_CHUNK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_covers_everything() {
        for n in [1u64, 1023, 1024, 1025, 5000] {
            let (tasks, _) = chunk_tasks(n);
            let total: u64 = (0..tasks).map(|t| task_len(t, n)).sum();
            assert_eq!(total, n);
        }
    }

    #[test]
    fn results_in_task_order_any_worker_count() {
        let seq: Vec<u64> = run_tasks(1, 64, |t| t * t);
        let par: Vec<u64> = run_tasks(8, 64, |t| t * t);
        assert_eq!(seq, par);
        assert_eq!(seq[5], 25);
    }
}
