//! Index-ordered parallel maps.
//!
//! With the `parallel` feature the maps run on the current rayon pool;
//! without it, or inside a single-thread pool, they run sequentially. Results
//! are always returned in index order, so any reduction done afterwards is
//! independent of the schedule.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rayon::current_num_threads() > 1 {
            return (0..count).into_par_iter().map(f).collect();
        }
    }
    (0..count).map(f).collect()
}

/// Like [`map_indexed`], but stops at the first error in index order.
pub fn try_map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(count, f).into_iter().collect()
}

/// Runs `op` with `workers` threads. `0` keeps the ambient pool.
pub fn with_workers<R, F>(workers: usize, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build worker pool");
            return pool.install(op);
        }
    }
    let _ = workers;
    op()
}

pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_for_any_worker_count() {
        let seq = with_workers(1, || map_indexed(1000, |i| i * i));
        let par = with_workers(4, || map_indexed(1000, |i| i * i));
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn first_error_in_index_order() {
        let r: Result<Vec<usize>> = with_workers(4, || {
            try_map_indexed(100, |i| {
                if i % 10 == 7 {
                    Err(crate::Error::InvalidInput(format!("{i}")))
                } else {
                    Ok(i)
                }
            })
        });
        assert_eq!(r, Err(crate::Error::InvalidInput("7".into())));
    }
}
