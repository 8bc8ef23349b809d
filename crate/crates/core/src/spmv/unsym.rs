use rayon::prelude::*;
use serde::Serialize;

use super::pool::{split_rows, WorkerPool};
use crate::error::{check_len, Error, Result};
use crate::sparse::{build_bss_plan, build_row_partition, BssPlan, CsrMatrix, PartitionScheme, RowPartition};

/// Parallel kernels for general (unsymmetric) CRS matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnsymVariant {
    /// Row blocks of equal row count.
    U1,
    /// Row blocks of equal nonzero count.
    U2,
    /// Branchless segmented scan.
    U3,
    /// Flag-driven segmented scan.
    U4,
}

impl UnsymVariant {
    pub const ALL: [UnsymVariant; 4] = [UnsymVariant::U1, UnsymVariant::U2, UnsymVariant::U3, UnsymVariant::U4];

    pub fn name(self) -> &'static str {
        match self {
            UnsymVariant::U1 => "u1",
            UnsymVariant::U2 => "u2",
            UnsymVariant::U3 => "u3",
            UnsymVariant::U4 => "u4",
        }
    }
}

#[derive(Debug, Clone)]
pub enum UnsymPlan {
    Rows(RowPartition),
    Bss(BssPlan),
}

/// A variant together with the plan it runs on.
#[derive(Debug, Clone)]
pub struct UnsymKernel {
    pub variant: UnsymVariant,
    pub plan: UnsymPlan,
}

impl UnsymKernel {
    /// Builds the plan a variant needs; `jl` is used by U3/U4 only (default 64).
    pub fn build(matrix: &CsrMatrix, variant: UnsymVariant, workers: usize, jl: Option<usize>) -> Result<Self> {
        let plan = match variant {
            UnsymVariant::U1 => UnsymPlan::Rows(build_row_partition(matrix.row_ptr(), workers, PartitionScheme::RowBased)?),
            UnsymVariant::U2 => {
                UnsymPlan::Rows(build_row_partition(matrix.row_ptr(), workers, PartitionScheme::NnzBalanced)?)
            }
            UnsymVariant::U3 | UnsymVariant::U4 => UnsymPlan::Bss(build_bss_plan(matrix, jl.unwrap_or(64))?),
        };
        Ok(Self { variant, plan })
    }

    pub fn jl(&self) -> Option<usize> {
        match &self.plan {
            UnsymPlan::Bss(p) => Some(p.jl()),
            UnsymPlan::Rows(_) => None,
        }
    }
}

/// Sequential reference: each row summed left to right.
pub fn spmv_ref(matrix: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_len(matrix.n(), x.len())?;
    let mut y = vec![0.0; matrix.n()];
    spmv_ref_into(matrix, x, &mut y);
    Ok(y)
}

pub(crate) fn spmv_ref_into(matrix: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    let (rp, ci, va) = (matrix.row_ptr(), matrix.col_idx(), matrix.values());
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = row_dot(&ci[rp[i]..rp[i + 1]], &va[rp[i]..rp[i + 1]], x);
    }
}

#[inline]
fn row_dot(cols: &[usize], vals: &[f64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&c, &v) in cols.iter().zip(vals) {
        acc += v * x[c];
    }
    acc
}

pub fn spmv_unsym(
    variant: UnsymVariant,
    matrix: &CsrMatrix,
    plan: &UnsymPlan,
    x: &[f64],
    pool: &mut WorkerPool,
) -> Result<Vec<f64>> {
    let mut y = vec![0.0; matrix.n()];
    spmv_unsym_into(variant, matrix, plan, x, &mut y, pool)?;
    Ok(y)
}

pub fn spmv_unsym_into(
    variant: UnsymVariant,
    matrix: &CsrMatrix,
    plan: &UnsymPlan,
    x: &[f64],
    y: &mut [f64],
    pool: &mut WorkerPool,
) -> Result<()> {
    check_len(matrix.n(), x.len())?;
    check_len(matrix.n(), y.len())?;
    match (variant, plan) {
        (UnsymVariant::U1, UnsymPlan::Rows(part)) | (UnsymVariant::U2, UnsymPlan::Rows(part)) => {
            let expected = if variant == UnsymVariant::U1 {
                PartitionScheme::RowBased
            } else {
                PartitionScheme::NnzBalanced
            };
            if part.scheme() != expected {
                return Err(Error::PlanMismatch(format!(
                    "{} needs a {:?} partition, got {:?}",
                    variant.name(),
                    expected,
                    part.scheme()
                )));
            }
            check_len(matrix.n(), part.n())?;
            row_blocks(matrix, part, x, y, pool);
            Ok(())
        }
        (UnsymVariant::U3, UnsymPlan::Bss(plan)) | (UnsymVariant::U4, UnsymPlan::Bss(plan)) => {
            if plan.n() != matrix.n() || plan.nnz() != matrix.nnz() {
                return Err(Error::PlanMismatch("segmented-scan plan built for another matrix".into()));
            }
            segmented_scan(variant == UnsymVariant::U3, matrix, plan, x, y, pool);
            Ok(())
        }
        (v, _) => Err(Error::PlanMismatch(format!("{} cannot run on this plan", v.name()))),
    }
}

fn row_blocks(matrix: &CsrMatrix, part: &RowPartition, x: &[f64], y: &mut [f64], pool: &WorkerPool) {
    let (rp, ci, va) = (matrix.row_ptr(), matrix.col_idx(), matrix.values());
    let blocks = split_rows(y, part.boundaries());
    pool.install(|| {
        blocks.into_par_iter().enumerate().for_each(|(p, block)| {
            let first = part.rows(p).start;
            for (off, yi) in block.iter_mut().enumerate() {
                let i = first + off;
                *yi = row_dot(&ci[rp[i]..rp[i + 1]], &va[rp[i]..rp[i + 1]], x);
            }
        });
    });
}

fn segmented_scan(branchless: bool, matrix: &CsrMatrix, plan: &BssPlan, x: &[f64], y: &mut [f64], pool: &mut WorkerPool) {
    let (ci, va) = (matrix.col_idx(), matrix.values());
    let mut sums = std::mem::take(&mut pool.slice_buf);
    sums.clear();
    sums.resize(plan.num_slices(), 0.0);

    let lanes = split_rows(&mut sums, plan.lane_ptr());
    let slices = plan.slices();
    let heads = plan.head_flags();
    pool.install(|| {
        lanes.into_par_iter().enumerate().for_each(|(lane, out)| {
            let first_slice = plan.lane_ptr()[lane];
            if branchless {
                for (s, slot) in out.iter_mut().enumerate() {
                    let sl = slices[first_slice + s];
                    let r = sl.start..sl.start + sl.len;
                    *slot = row_dot(&ci[r.clone()], &va[r], x);
                }
            } else {
                let range = plan.lane_range(lane);
                if range.is_empty() {
                    return;
                }
                let start = range.start;
                let mut s = 0;
                let mut acc = 0.0;
                for k in range {
                    if heads[k] && k != start {
                        out[s] = acc;
                        s += 1;
                        acc = 0.0;
                    }
                    acc += va[k] * x[ci[k]];
                }
                out[s] = acc;
            }
        });
    });

    // carry pass: each row gathers its slices in order
    let rsp = plan.row_slice_ptr();
    let sums_ref = &sums;
    let chunk = y.len().div_ceil(pool.size()).max(1);
    pool.install(|| {
        y.par_chunks_mut(chunk).enumerate().for_each(|(c, block)| {
            let first = c * chunk;
            for (off, yi) in block.iter_mut().enumerate() {
                let i = first + off;
                let mut acc = 0.0;
                for &v in &sums_ref[rsp[i]..rsp[i + 1]] {
                    acc += v;
                }
                *yi = acc;
            }
        });
    });
    pool.slice_buf = sums;
}
