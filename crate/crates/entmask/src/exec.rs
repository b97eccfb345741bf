//! Execution policy for the embarrassingly parallel kernels (joint-matrix
//! quadrature, grid scans, count simulation).
//!
//! With the `parallel` feature (default) the `Auto` policy fans work out
//! over a rayon thread pool; without it, or with `Sequential`, the same
//! closures run on the calling thread in index order. Results are
//! collected in input order either way, so outputs are identical bit for
//! bit across policies and thread counts.

#[cfg(feature = "parallel")]
use crate::error::Error;
use crate::error::Result;

/// How a bulk computation distributes its independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Use the process thread pool when the `parallel` feature is
    /// compiled in; otherwise identical to `Sequential`.
    #[default]
    Auto,
    /// Run on the calling thread, in index order.
    Sequential,
}

/// Cap the size of the global thread pool. Call once, before the first
/// parallel computation; `n = 0` keeps the library default (one thread
/// per logical CPU). Without the `parallel` feature this only validates
/// the argument, since all work is sequential anyway.
pub fn configure_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool already initialized: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(())
    }
}

/// Map `f` over `0..n`, preserving index order in the output.
pub(crate) fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Auto {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}
