//! Execution policy for batch workloads.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool of
//! the requested size. Without it every policy runs sequentially. Results
//! are always returned in input order, so output never depends on the
//! thread count.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// A pool of this many threads; `0` uses rayon's default (all cores).
    Threads(usize),
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::Threads(0)
    }
}

impl Parallelism {
    /// `1` maps to [`Parallelism::Sequential`].
    pub fn from_threads(n: usize) -> Self {
        if n == 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(n)
        }
    }

    /// Maps `f` over `items` with one `init()` state per worker.
    pub fn map_init<T, S, R, I, F>(self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        match self {
            Parallelism::Sequential => sequential_map(items, init, f),
            Parallelism::Threads(n) => imp::map_init(n, items, init, f),
        }
    }

    /// Like [`Parallelism::map_init`] but stops at the first error. Which
    /// items ran before the error is unspecified in parallel mode.
    pub fn try_for_each_init<T, S, E, I, F>(self, items: &[T], init: I, f: F) -> Result<(), E>
    where
        T: Sync,
        E: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> Result<(), E> + Sync + Send,
    {
        match self {
            Parallelism::Sequential => {
                let mut state = init();
                items.iter().try_for_each(|item| f(&mut state, item))
            }
            Parallelism::Threads(n) => imp::try_for_each_init(n, items, init, f),
        }
    }
}

fn sequential_map<T, S, R>(items: &[T], init: impl Fn() -> S, f: impl Fn(&mut S, &T) -> R) -> Vec<R> {
    let mut state = init();
    items.iter().map(|item| f(&mut state, item)).collect()
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    fn pool(n: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build thread pool")
    }

    pub(super) fn map_init<T, S, R, I, F>(n: usize, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        pool(n).install(|| items.par_iter().map_init(init, |s, item| f(s, item)).collect())
    }

    pub(super) fn try_for_each_init<T, S, E, I, F>(n: usize, items: &[T], init: I, f: F) -> Result<(), E>
    where
        T: Sync,
        E: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> Result<(), E> + Sync + Send,
    {
        pool(n).install(|| items.par_iter().try_for_each_init(init, |s, item| f(s, item)))
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub(super) fn map_init<T, S, R, I, F>(_n: usize, items: &[T], init: I, f: F) -> Vec<R>
    where
        I: Fn() -> S,
        F: Fn(&mut S, &T) -> R,
    {
        super::sequential_map(items, init, f)
    }

    pub(super) fn try_for_each_init<T, S, E, I, F>(_n: usize, items: &[T], init: I, f: F) -> Result<(), E>
    where
        I: Fn() -> S,
        F: Fn(&mut S, &T) -> Result<(), E>,
    {
        let mut state = init();
        items.iter().try_for_each(|item| f(&mut state, item))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Parallelism::Sequential.map_init(&items, || 0u64, |_, x| x * x);
        let par = Parallelism::Threads(4).map_init(&items, || 0u64, |_, x| x * x);
        assert_eq!(seq, par);
    }

    #[test]
    fn errors_propagate() {
        let items: Vec<u32> = (0..100).collect();
        for p in [Parallelism::Sequential, Parallelism::Threads(3)] {
            let r = p.try_for_each_init(&items, || (), |_, &x| if x == 42 { Err(x) } else { Ok(()) });
            assert_eq!(r, Err(42));
        }
    }
}
