//! Data-parallel helpers with a sequential fallback.
//!
//! Batch results never depend on the execution mode or worker count: items
//! are processed independently and collected in input order.

use serde::{Deserialize, Serialize};

/// How batch operations are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is enabled,
    /// sequentially otherwise.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let _ = exec;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f(index, chunk)` to consecutive `chunk`-sized pieces of `data`,
/// grouping `group` chunks per parallel task.
pub fn for_each_chunk<F>(exec: Execution, data: &mut [f64], chunk: usize, group: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && data.len() > chunk * group {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk * group)
            .enumerate()
            .for_each(|(g, block)| {
                for (k, c) in block.chunks_mut(chunk).enumerate() {
                    f(g * group + k, c);
                }
            });
        return;
    }
    let _ = (exec, group);
    for (k, c) in data.chunks_mut(chunk).enumerate() {
        f(k, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(Execution::Sequential, &xs, |i, x| x * x + i as u64);
        let b = map(Execution::Parallel, &xs, |i, x| x * x + i as u64);
        assert_eq!(a, b);
        let mut d1 = vec![1.0; 64];
        let mut d2 = d1.clone();
        for_each_chunk(Execution::Sequential, &mut d1, 4, 2, |k, c| c[0] = k as f64);
        for_each_chunk(Execution::Parallel, &mut d2, 4, 2, |k, c| c[0] = k as f64);
        assert_eq!(d1, d2);
    }
}
