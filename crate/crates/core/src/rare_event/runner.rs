//! Deterministic parallel execution of independent replicas.

use rayon::prelude::*;

use crate::{Error, Result};

/// Runs `f` inside a dedicated pool of `workers` threads.
///
/// Replica loops started inside use that pool; their results do not depend
/// on the number of workers.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Err(Error::InvalidParameter("workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Evaluates `f(scratch, i)` for `i in 0..n`, returned in index order.
///
/// The index range is split into contiguous blocks across the current pool;
/// each worker reuses one scratch value created by `init`.
pub(crate) fn map_replicas<T, S, I, F>(n: u64, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    let n = usize::try_from(n).map_err(|_| Error::InvalidParameter("too many replicas".into()))?;
    (0..n)
        .into_par_iter()
        .map_init(init, |s, i| f(s, i as u64))
        .collect()
}
