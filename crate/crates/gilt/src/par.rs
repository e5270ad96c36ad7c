//! Data-parallel map helpers with a sequential fallback.
//!
//! Every batch-shaped loop in the crate (per-sentence gradients, beam
//! hypothesis scoring, corpus-wide evaluation, finite differences) goes
//! through [`maybe_par_map`]. With the `parallel` feature it fans out on
//! rayon; without it it degenerates to [`seq_map`]. Results are collected
//! in input order either way, so downstream reductions are deterministic
//! regardless of thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential map, always available. Benchmarks compare this against the
/// default dispatch to measure the rayon speedup.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map over `items`, in parallel when the `parallel` feature is enabled.
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq_map(items, f)
    }
}

/// Indexed variant; `f` receives `(index, item)`.
pub fn maybe_par_map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Map over a range of indices.
pub fn maybe_par_map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_matches_seq() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = seq_map(&xs, |x| x * x + 1);
        let b = maybe_par_map(&xs, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
