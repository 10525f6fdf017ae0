//! Execution policy for the data-parallel loops (Monte-Carlo replicates,
//! corpus experiments, predictive-check replicates).
//!
//! With the `parallel` feature the loops run on rayon; without it, or with
//! [`ExecPolicy::Sequential`], they run on the calling thread. Both paths
//! produce identical results: work items carry their own RNG substreams and
//! reductions are integer counts or index-ordered collections.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPolicy {
    Sequential,
    Parallel,
}

impl Default for ExecPolicy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecPolicy::Parallel
        } else {
            ExecPolicy::Sequential
        }
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub(crate) fn map_indexed<T, F>(policy: ExecPolicy, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Sums `f(chunk_start, chunk_end)` over `0..n` split into fixed chunks.
pub(crate) fn sum_chunked<F>(policy: ExecPolicy, n: u64, chunk: u64, f: F) -> u64
where
    F: Fn(u64, u64) -> u64 + Sync + Send,
{
    let chunk = chunk.max(1);
    let chunks = n.div_ceil(chunk);
    let run = |c: u64| {
        let start = c * chunk;
        f(start, (start + chunk).min(n))
    };
    match policy {
        #[cfg(feature = "parallel")]
        ExecPolicy::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(run).sum()
        }
        _ => (0..chunks).map(run).sum(),
    }
}
