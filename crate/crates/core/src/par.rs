//! Data-parallel helpers. With the `parallel` feature (on by default) work is
//! spread over rayon; without it everything runs on the calling thread.
//! Results always come back in input order, so callers stay deterministic.

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Below this many items the parallel path costs more than it saves.
pub const MIN_PARALLEL_LEN: usize = 512;

impl Exec {
    /// `Sequential` for short inputs, `self` otherwise.
    pub fn for_len(self, len: usize) -> Exec {
        if len < MIN_PARALLEL_LEN {
            Exec::Sequential
        } else {
            self
        }
    }
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Exec::Parallel => items.iter().map(f).collect(),
    }
}

/// Like [`map`], but on a dedicated pool of `threads` workers. One thread, or
/// a build without the `parallel` feature, runs sequentially.
pub fn map_with_threads<T, R, F>(threads: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
    }
    let _ = threads;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map(Exec::Sequential, &xs, |x| x * x);
        assert_eq!(map(Exec::Parallel, &xs, |x| x * x), seq);
        assert_eq!(map_with_threads(4, &xs, |x| x * x), seq);
        assert_eq!(map_with_threads(1, &xs, |x| x * x), seq);
    }
}
