//! Batch evaluation over independent work items.
//!
//! With the `parallel` feature (default) the batch helpers run on the rayon
//! global pool; without it they run sequentially. Output order always matches
//! input order. [`sequential`] is available in both builds so callers and
//! benches can pin the execution strategy explicitly.

/// Map `f` over `0..n`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    parallel::map_range(n, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    sequential::map_range(n, f)
}

/// Map `f` over a slice, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    parallel::map(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    sequential::map(items, f)
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

pub mod sequential {
    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        F: Fn(usize) -> R,
    {
        (0..n).map(f).collect()
    }

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let out = map_range(1000, |i| i * i);
        assert_eq!(out, sequential::map_range(1000, |i| i * i));
        let items: Vec<u64> = (0..257).collect();
        assert_eq!(map(&items, |x| x + 1), sequential::map(&items, |x| x + 1));
    }
}
