//! Execution policy for embarrassingly parallel ensemble work.
//!
//! Results are always collected in index order, so sequential and parallel
//! runs of the same seeded workload produce identical output.

/// Worker-count policy: `0` uses every core, `1` runs sequentially without
/// touching rayon, `n > 1` runs on a dedicated n-thread pool.
///
/// Without the `parallel` feature everything runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    workers: usize,
}

impl Execution {
    pub fn sequential() -> Self {
        Self { workers: 1 }
    }

    /// All available cores (or sequential when built without `parallel`).
    pub fn parallel() -> Self {
        Self { workers: 0 }
    }

    pub fn with_workers(workers: usize) -> Self {
        Self { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Default for Execution {
    fn default() -> Self {
        Self::parallel()
    }
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec.workers {
            1 => (0..len).map(f).collect(),
            0 => (0..len).into_par_iter().map(f).collect(),
            w => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .expect("failed to build worker pool");
                pool.install(|| (0..len).into_par_iter().map(f).collect())
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        (0..len).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        for exec in [Execution::sequential(), Execution::parallel()] {
            let out = map_indexed(exec, 100, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let seq = map_indexed(Execution::sequential(), 64, |i| (i as f64).sqrt().sin());
        let par = map_indexed(Execution::parallel(), 64, |i| (i as f64).sqrt().sin());
        assert_eq!(seq, par);
    }
}
