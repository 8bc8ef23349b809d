use std::sync::Arc;

use crate::error::{Error, Result};

/// Fixed-size thread pool plus the worker-private buffers the kernels need.
///
/// Scratch vectors are all-zero between kernel calls; the symmetric kernels
/// restore that after their reduction.
pub struct WorkerPool {
    pool: Arc<rayon::ThreadPool>,
    size: usize,
    pub(crate) scratch: Vec<Vec<f64>>,
    pub(crate) slice_buf: Vec<f64>,
}

impl WorkerPool {
    pub fn new(size: usize) -> Result<Self> {
        if size < 1 {
            return Err(Error::InvalidArgument("worker pool needs at least one worker".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(size)
            .thread_name(|i| format!("spmv-worker-{i}"))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            pool: Arc::new(pool),
            size,
            scratch: Vec::new(),
            slice_buf: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    pub(crate) fn handle(&self) -> Arc<rayon::ThreadPool> {
        Arc::clone(&self.pool)
    }

    /// Ensures `workers` zeroed scratch vectors of length `n`.
    pub(crate) fn prepare_scratch(&mut self, workers: usize, n: usize) {
        if self.scratch.len() < workers || self.scratch.first().is_some_and(|s| s.len() != n) {
            self.scratch = vec![vec![0.0; n]; workers];
        }
    }
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("size", &self.size).finish()
    }
}

/// Splits `y` into the disjoint row blocks given by `boundaries`.
pub(crate) fn split_rows<'a>(mut y: &'a mut [f64], boundaries: &[usize]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(boundaries.len().saturating_sub(1));
    for w in boundaries.windows(2) {
        let (head, tail) = y.split_at_mut(w[1] - w[0]);
        out.push(head);
        y = tail;
    }
    out
}
