use rayon::prelude::*;
use serde::Serialize;

use super::pool::{split_rows, WorkerPool};
use crate::error::{check_len, Error, Result};
use crate::sparse::{build_reduction_regions, build_row_partition, PartitionScheme, ReductionRegions, RowPartition, SymCsrMatrix};

/// Parallel kernels for symmetric matrices held as diagonal + upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymVariant {
    /// Row blocks of equal row count, full-length reduction.
    S1,
    /// Nonzero-balanced row blocks, full-length reduction.
    S2,
    /// Nonzero-balanced row blocks, reduction restricted to each worker's region.
    S3,
}

impl SymVariant {
    pub const ALL: [SymVariant; 3] = [SymVariant::S1, SymVariant::S2, SymVariant::S3];

    pub fn name(self) -> &'static str {
        match self {
            SymVariant::S1 => "s1",
            SymVariant::S2 => "s2",
            SymVariant::S3 => "s3",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymKernel {
    pub variant: SymVariant,
    pub partition: RowPartition,
    pub regions: Option<ReductionRegions>,
}

impl SymKernel {
    pub fn build(matrix: &SymCsrMatrix, variant: SymVariant, workers: usize) -> Result<Self> {
        let scheme = match variant {
            SymVariant::S1 => PartitionScheme::RowBased,
            SymVariant::S2 | SymVariant::S3 => PartitionScheme::NnzBalanced,
        };
        let partition = build_row_partition(matrix.row_ptr(), workers, scheme)?;
        let regions = match variant {
            SymVariant::S3 => Some(build_reduction_regions(matrix, &partition)?),
            _ => None,
        };
        Ok(Self {
            variant,
            partition,
            regions,
        })
    }

    /// Scratch elements touched by the cross-worker reduction of one call.
    pub fn reduction_work(&self) -> usize {
        match (&self.variant, &self.regions) {
            (SymVariant::S3, Some(r)) => r.total_work(),
            _ => self.partition.num_workers() * self.partition.n(),
        }
    }
}

pub fn spmv_sym(
    variant: SymVariant,
    matrix: &SymCsrMatrix,
    partition: &RowPartition,
    regions: Option<&ReductionRegions>,
    x: &[f64],
    pool: &mut WorkerPool,
) -> Result<Vec<f64>> {
    let mut y = vec![0.0; matrix.n()];
    spmv_sym_into(variant, matrix, partition, regions, x, &mut y, pool)?;
    Ok(y)
}

pub fn spmv_sym_into(
    variant: SymVariant,
    matrix: &SymCsrMatrix,
    partition: &RowPartition,
    regions: Option<&ReductionRegions>,
    x: &[f64],
    y: &mut [f64],
    pool: &mut WorkerPool,
) -> Result<()> {
    let n = matrix.n();
    check_len(n, x.len())?;
    check_len(n, y.len())?;
    check_len(n, partition.n())?;
    let expected = match variant {
        SymVariant::S1 => PartitionScheme::RowBased,
        SymVariant::S2 | SymVariant::S3 => PartitionScheme::NnzBalanced,
    };
    if partition.scheme() != expected {
        return Err(Error::PlanMismatch(format!(
            "{} needs a {:?} partition",
            variant.name(),
            expected
        )));
    }
    let regions = match (variant, regions) {
        (SymVariant::S3, None) => {
            return Err(Error::PlanMismatch("s3 requires reduction regions".into()));
        }
        (SymVariant::S3, Some(r)) => {
            if r.num_workers() != partition.num_workers() {
                return Err(Error::PlanMismatch("regions built for a different partition".into()));
            }
            Some(r)
        }
        _ => None,
    };

    let workers = partition.num_workers();
    let chunk = n.div_ceil(pool.size()).max(1);
    let handle = pool.handle();
    pool.prepare_scratch(workers, n);
    let (rp, ci, va) = (matrix.row_ptr(), matrix.col_idx(), matrix.values());

    // row-direction products into y, transpose scatter into private scratch
    let blocks = split_rows(y, partition.boundaries());
    let scratch = &mut pool.scratch[..workers];
    handle.install(|| {
        blocks
            .into_par_iter()
            .zip(scratch.par_iter_mut())
            .enumerate()
            .for_each(|(p, (block, s))| {
                let first = partition.rows(p).start;
                #[cfg(debug_assertions)]
                let region = regions.map(|r| r.region(p));
                for (off, yi) in block.iter_mut().enumerate() {
                    let i = first + off;
                    let (mut k, end) = (rp[i], rp[i + 1]);
                    let mut acc = 0.0;
                    if k < end && ci[k] == i {
                        acc += va[k] * x[i];
                        k += 1;
                    }
                    let xi = x[i];
                    for k in k..end {
                        let j = ci[k];
                        #[cfg(debug_assertions)]
                        if let Some(r) = &region {
                            debug_assert!(r.contains(&j), "scatter target {j} outside region {r:?}");
                        }
                        acc += va[k] * x[j];
                        s[j] += va[k] * xi;
                    }
                    *yi = acc;
                }
            });
    });

    // cross-worker reduction, workers added in ascending order per element
    let scratch = &pool.scratch[..workers];
    handle.install(|| {
        y.par_chunks_mut(chunk).enumerate().for_each(|(c, block)| {
            let a = c * chunk;
            let b = a + block.len();
            for (p, s) in scratch.iter().enumerate() {
                let (lo, hi) = match regions {
                    Some(r) => {
                        let reg = r.region(p);
                        (reg.start.max(a), reg.end.min(b))
                    }
                    None => (a, b),
                };
                for j in lo..hi {
                    block[j - a] += s[j];
                }
            }
        });
    });

    // restore the all-zero scratch invariant over what was touched
    let scratch = &mut pool.scratch[..workers];
    handle.install(|| {
        scratch.par_iter_mut().enumerate().for_each(|(p, s)| match regions {
            Some(r) => s[r.region(p)].fill(0.0),
            None => s.fill(0.0),
        });
    });
    Ok(())
}
