//! Execution policy for the data-parallel inner loops.
//!
//! Every scan over the data (selection argmax, embedding rows) goes through
//! the helpers here. With the `parallel` feature the `Parallel` policy runs on
//! the ambient rayon pool; without it both policies take the sequential path.
//! Reductions are order-independent, so both paths return identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this policy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Picks the better of two `(index, score)` candidates: higher score wins,
/// equal scores resolve to the lower index. NaN scores never win.
#[inline]
pub(crate) fn better(a: Option<(usize, f64)>, b: Option<(usize, f64)>) -> Option<(usize, f64)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Index and value of the maximum of `score(i)` over `0..n`, lowest index on ties.
pub fn argmax<F>(n: usize, exec: Execution, score: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let candidate = |i: usize| {
        let s = score(i);
        if s.is_nan() {
            None
        } else {
            Some((i, s))
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n)
            .into_par_iter()
            .with_min_len(256)
            .map(candidate)
            .reduce(|| None, better);
    }
    let _ = exec;
    (0..n).map(candidate).fold(None, better)
}

/// `(0..n).map(f).collect()` under the given policy, preserving order.
pub fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().with_min_len(64).map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fills `out` in fixed-size chunks, one chunk per index.
pub fn fill_chunks<F>(out: &mut [f64], chunk: usize, exec: Execution, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if chunk == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .with_min_len(16)
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}
