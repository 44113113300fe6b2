//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent cells are fanned out
//! over rayon; without it, or inside [`with_execution`] with
//! [`Execution::Sequential`], everything runs on the calling thread. Results
//! are always collected in input order so reductions are schedule
//! independent.

use std::cell::Cell;

/// How independent cells of a sweep are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

thread_local! {
    static MODE: Cell<Option<Execution>> = const { Cell::new(None) };
}

/// Execution mode in effect on the current thread.
pub fn current() -> Execution {
    MODE.with(|m| m.get()).unwrap_or_default()
}

/// Runs `f` with the given execution mode on this thread.
pub fn with_execution<R>(mode: Execution, f: impl FnOnce() -> R) -> R {
    let prev = MODE.with(|m| m.replace(Some(mode)));
    let out = f();
    MODE.with(|m| m.set(prev));
    out
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Fallible ordered map; the first error in input order wins.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

/// Index of the first item (in input order) satisfying `pred`.
pub fn position_first<T, F>(items: &[T], pred: F) -> Option<usize>
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    match current() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().position_first(pred)
        }
        _ => items.iter().position(pred),
    }
}

/// Caps the number of worker threads. Must run before the first parallel
/// map; returns false if the pool was already initialized. A no-op without
/// the `parallel` feature.
pub fn set_worker_cap(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_default_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(&xs, |x| x * x);
        let b = with_execution(Execution::Sequential, || map(&xs, |x| x * x));
        assert_eq!(a, b);
        assert_eq!(position_first(&xs, |&x| x > 500), Some(501));
    }

    #[test]
    fn mode_is_restored() {
        let before = current();
        with_execution(Execution::Sequential, || {
            assert_eq!(current(), Execution::Sequential)
        });
        assert_eq!(current(), before);
    }
}
