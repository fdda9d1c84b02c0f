//! Runtime-selectable execution mode: the data-parallel kernels (residual
//! and Jacobian assembly, sparse matvec, pairwise intersection scans) run
//! through these helpers so benches can compare sequential and parallel
//! execution of the same code path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Rayon-parallel when the `parallel` feature is enabled; otherwise
    /// falls back to sequential.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// `out[i] = f(i)` for i in 0..out.len().
pub fn fill_indexed<T, F>(mode: ExecMode, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        out.par_iter_mut().enumerate().for_each(|(i, slot)| {
            *slot = f(i);
        });
        return;
    }
    let _ = mode;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Collect `f(i)` over a range.
pub fn map_indexed<T, F>(mode: ExecMode, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

/// Reduce `f(i)` with `combine` (associative, commutative) over a range.
pub fn reduce_indexed<T, F, C>(mode: ExecMode, len: usize, identity: T, f: F, combine: C) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return (0..len)
            .into_par_iter()
            .map(&f)
            .reduce(|| identity.clone(), &combine);
    }
    let _ = mode;
    (0..len).map(f).fold(identity, combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let sq = |i: usize| (i * i) as u64;
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            assert_eq!(map_indexed(mode, 10, sq), (0..10).map(sq).collect::<Vec<_>>());
            let sum = reduce_indexed(mode, 100, 0u64, sq, |a, b| a + b);
            assert_eq!(sum, (0..100).map(sq).sum::<u64>());
            let mut buf = vec![0u64; 10];
            fill_indexed(mode, &mut buf, sq);
            assert_eq!(buf, (0..10).map(sq).collect::<Vec<_>>());
        }
    }
}
