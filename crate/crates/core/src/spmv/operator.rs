use std::time::{Duration, Instant};

use super::pool::WorkerPool;
use super::sym::{spmv_sym_into, SymKernel, SymVariant};
use super::unsym::{spmv_ref_into, spmv_unsym_into, UnsymKernel, UnsymPlan, UnsymVariant};
use crate::error::{Error, Result};
use crate::sparse::{build_row_partition, CsrMatrix, PartitionScheme, SymCsrMatrix};

/// Anything that can compute `y = A·x` for a square `A`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&mut self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        spmv_ref_into(self, x, y);
    }
}

/// Sequential product from the stored upper triangle.
impl LinearOperator for SymCsrMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let (rp, ci, va) = (self.row_ptr(), self.col_idx(), self.values());
        for i in 0..self.n() {
            let mut acc = 0.0;
            for k in rp[i]..rp[i + 1] {
                let j = ci[k];
                acc += va[k] * x[j];
                if j != i {
                    y[j] += va[k] * x[i];
                }
            }
            y[i] += acc;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MatrixRef<'a> {
    General(&'a CsrMatrix),
    Symmetric(&'a SymCsrMatrix),
}

impl MatrixRef<'_> {
    pub fn n(&self) -> usize {
        match self {
            MatrixRef::General(a) => a.n(),
            MatrixRef::Symmetric(s) => s.n(),
        }
    }

    /// Flops of one product under the 2-per-stored-nonzero model; symmetric
    /// storage counts each off-diagonal twice: 4·nnz_stored − 2·n.
    pub fn flops_per_product(&self) -> u64 {
        match self {
            MatrixRef::General(a) => 2 * a.nnz() as u64,
            MatrixRef::Symmetric(s) => (4 * s.nnz() as u64).saturating_sub(2 * s.n() as u64),
        }
    }
}

#[derive(Debug, Clone)]
pub enum KernelChoice {
    Unsym(UnsymKernel),
    Sym(SymKernel),
}

impl KernelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            KernelChoice::Unsym(k) => k.variant.name(),
            KernelChoice::Sym(k) => k.variant.name(),
        }
    }

    pub fn jl(&self) -> Option<usize> {
        match self {
            KernelChoice::Unsym(k) => k.jl(),
            KernelChoice::Sym(_) => None,
        }
    }
}

/// A matrix bound to a kernel and a worker pool, counting calls and kernel time.
pub struct SpmvOperator<'a> {
    matrix: MatrixRef<'a>,
    kernel: KernelChoice,
    pool: WorkerPool,
    calls: u64,
    kernel_time: Duration,
}

impl<'a> SpmvOperator<'a> {
    pub fn new(matrix: MatrixRef<'a>, kernel: KernelChoice, pool: WorkerPool) -> Result<Self> {
        match (&matrix, &kernel) {
            (MatrixRef::General(_), KernelChoice::Unsym(_)) | (MatrixRef::Symmetric(_), KernelChoice::Sym(_)) => {}
            _ => {
                return Err(Error::PlanMismatch(
                    "kernel family does not match matrix storage".into(),
                ))
            }
        }
        let mut op = Self {
            matrix,
            kernel,
            pool,
            calls: 0,
            kernel_time: Duration::ZERO,
        };
        // validates plan/variant pairing once so apply() can stay infallible
        let n = op.matrix.n();
        let mut y = vec![0.0; n];
        op.try_apply(&vec![0.0; n], &mut y)?;
        op.calls = 0;
        op.kernel_time = Duration::ZERO;
        Ok(op)
    }

    /// Row-based kernel (U1 or S1) on the given pool; no tuning involved.
    pub fn row_based(matrix: MatrixRef<'a>, pool: WorkerPool) -> Result<Self> {
        let kernel = match matrix {
            MatrixRef::General(a) => KernelChoice::Unsym(UnsymKernel {
                variant: UnsymVariant::U1,
                plan: UnsymPlan::Rows(build_row_partition(a.row_ptr(), pool.size(), PartitionScheme::RowBased)?),
            }),
            MatrixRef::Symmetric(s) => KernelChoice::Sym(SymKernel {
                variant: SymVariant::S1,
                partition: build_row_partition(s.row_ptr(), pool.size(), PartitionScheme::RowBased)?,
                regions: None,
            }),
        };
        Self::new(matrix, kernel, pool)
    }

    pub fn matrix(&self) -> MatrixRef<'a> {
        self.matrix
    }

    pub fn kernel(&self) -> &KernelChoice {
        &self.kernel
    }

    pub fn pool(&self) -> &WorkerPool {
        &self.pool
    }

    pub fn into_pool(self) -> WorkerPool {
        self.pool
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn kernel_time(&self) -> Duration {
        self.kernel_time
    }

    /// Achieved rate over all products so far; zero before the first call.
    pub fn gflops(&self) -> f64 {
        let secs = self.kernel_time.as_secs_f64();
        if self.calls == 0 || secs <= 0.0 {
            return 0.0;
        }
        self.matrix.flops_per_product() as f64 * self.calls as f64 / secs / 1e9
    }

    pub fn try_apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let t0 = Instant::now();
        match (&self.matrix, &self.kernel) {
            (MatrixRef::General(a), KernelChoice::Unsym(k)) => {
                spmv_unsym_into(k.variant, a, &k.plan, x, y, &mut self.pool)?
            }
            (MatrixRef::Symmetric(s), KernelChoice::Sym(k)) => {
                spmv_sym_into(k.variant, s, &k.partition, k.regions.as_ref(), x, y, &mut self.pool)?
            }
            _ => unreachable!("pairing checked in new()"),
        }
        self.kernel_time += t0.elapsed();
        self.calls += 1;
        Ok(())
    }
}

impl LinearOperator for SpmvOperator<'_> {
    fn dim(&self) -> usize {
        self.matrix.n()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.try_apply(x, y).expect("operator dimensions validated by caller");
    }
}
