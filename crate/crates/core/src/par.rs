//! Data-parallel helpers. Parameter sweeps, verifier batteries, and
//! correlation-grid points are embarrassingly parallel; everything routes
//! through `par_map` so the sequential fallback stays a feature flag away.
//!
//! `BIUNITARY_LAB_THREADS` caps the worker count; setting it to 1 forces the
//! sequential path even with the `parallel` feature enabled.

/// Worker cap from the environment, if any.
pub fn thread_cap() -> Option<usize> {
    std::env::var("BIUNITARY_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[cfg(feature = "parallel")]
mod imp {
    use once_cell_lite::OnceLock;
    use rayon::prelude::*;

    mod once_cell_lite {
        pub use std::sync::OnceLock;
    }

    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

    fn pool() -> &'static Option<rayon::ThreadPool> {
        POOL.get_or_init(|| {
            super::thread_cap().map(|n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("thread pool")
            })
        })
    }

    pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        if super::thread_cap() == Some(1) {
            return items.into_iter().map(f).collect();
        }
        match pool() {
            Some(p) => p.install(|| items.into_par_iter().map(f).collect()),
            None => items.into_par_iter().map(f).collect(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
    where
        F: Fn(T) -> U,
    {
        items.into_iter().map(f).collect()
    }
}

pub use imp::par_map;

/// Sequential reference path, kept callable for benchmarks regardless of
/// features.
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_matches_seq_map() {
        let items: Vec<u64> = (0..257).collect();
        let f = |x: u64| x * x + 1;
        assert_eq!(par_map(items.clone(), f), seq_map(items, f));
    }
}
