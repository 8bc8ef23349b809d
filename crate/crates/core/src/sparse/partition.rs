use serde::Serialize;

use super::csr::SymCsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Contiguous ranges with near-equal row counts.
    RowBased,
    /// Contiguous ranges with near-equal nonzero counts; rows stay whole.
    NnzBalanced,
}

/// Contiguous row ranges, one per worker: worker `p` owns
/// `boundaries[p]..boundaries[p + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPartition {
    boundaries: Vec<usize>,
    scheme: PartitionScheme,
}

impl RowPartition {
    pub fn num_workers(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn scheme(&self) -> PartitionScheme {
        self.scheme
    }

    pub fn rows(&self, worker: usize) -> std::ops::Range<usize> {
        self.boundaries[worker]..self.boundaries[worker + 1]
    }

    pub fn n(&self) -> usize {
        *self.boundaries.last().expect("at least one boundary")
    }

    /// Nonzeros owned by each worker.
    pub fn worker_loads(&self, row_ptr: &[usize]) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| row_ptr[w[1]] - row_ptr[w[0]]).collect()
    }
}

pub fn build_row_partition(row_ptr: &[usize], num_workers: usize, scheme: PartitionScheme) -> Result<RowPartition> {
    if num_workers < 1 {
        return Err(Error::InvalidArgument("num_workers must be at least 1".into()));
    }
    if row_ptr.is_empty() {
        return Err(Error::InvalidStructure("row_ptr is empty".into()));
    }
    let n = row_ptr.len() - 1;
    let nnz = row_ptr[n];
    let p_count = num_workers as u128;
    let mut boundaries = Vec::with_capacity(num_workers + 1);
    boundaries.push(0);
    for p in 1..num_workers {
        let b = match scheme {
            PartitionScheme::RowBased => p * n / num_workers,
            PartitionScheme::NnzBalanced => {
                // smallest r with row_ptr[r] >= p*nnz/P, compared exactly as
                // row_ptr[r]*P >= p*nnz
                let target = p as u128 * nnz as u128;
                row_ptr.partition_point(|&prefix| (prefix as u128) * p_count < target)
            }
        };
        boundaries.push(b.min(n));
    }
    boundaries.push(n);
    Ok(RowPartition { boundaries, scheme })
}

/// Per-worker index bounds `[lo, hi)` on the reduction vector of symmetric SpMV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionRegions {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl ReductionRegions {
    pub fn num_workers(&self) -> usize {
        self.lo.len()
    }

    pub fn region(&self, worker: usize) -> std::ops::Range<usize> {
        self.lo[worker]..self.hi[worker]
    }

    pub fn is_empty(&self, worker: usize) -> bool {
        self.lo[worker] == self.hi[worker]
    }

    /// Total reduction work Σ(hi − lo).
    pub fn total_work(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(lo, hi)| hi - lo).sum()
    }
}

/// Minimal cover of each worker's transpose-scatter targets: the column
/// indices of strictly-upper entries in its rows.
pub fn build_reduction_regions(matrix: &SymCsrMatrix, partition: &RowPartition) -> Result<ReductionRegions> {
    if partition.n() != matrix.n() {
        return Err(Error::DimensionMismatch {
            expected: matrix.n(),
            got: partition.n(),
        });
    }
    let row_ptr = matrix.row_ptr();
    let col_idx = matrix.col_idx();
    let workers = partition.num_workers();
    let mut lo = vec![0; workers];
    let mut hi = vec![0; workers];
    for p in 0..workers {
        let mut min = usize::MAX;
        let mut max = 0;
        let mut any = false;
        for i in partition.rows(p) {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            // sorted columns: the first strictly-upper entry is the smallest,
            // the last entry the largest
            let first_upper = cols.partition_point(|&c| c <= i);
            if first_upper < cols.len() {
                any = true;
                min = min.min(cols[first_upper]);
                max = max.max(cols[cols.len() - 1]);
            }
        }
        if any {
            lo[p] = min;
            hi[p] = max + 1;
        } else {
            let start = partition.rows(p).start;
            lo[p] = start;
            hi[p] = start;
        }
    }
    Ok(ReductionRegions { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_ptr_from_counts(counts: &[usize]) -> Vec<usize> {
        let mut rp = vec![0];
        for c in counts {
            rp.push(rp.last().unwrap() + c);
        }
        rp
    }

    /// Brute force: for each p, the smallest split r with prefix(r) >= p*nnz/P.
    fn oracle_boundaries(counts: &[usize], p_count: usize) -> Vec<usize> {
        let rp = row_ptr_from_counts(counts);
        let nnz = rp[counts.len()];
        let mut b = vec![0];
        for p in 1..p_count {
            let r = (0..=counts.len())
                .find(|&r| rp[r] as f64 >= p as f64 * nnz as f64 / p_count as f64)
                .unwrap();
            b.push(r);
        }
        b.push(counts.len());
        b
    }

    #[test]
    fn nnz_balanced_skewed_rows() {
        let counts = [10, 1, 1, 10];
        let rp = row_ptr_from_counts(&counts);
        let part = build_row_partition(&rp, 2, PartitionScheme::NnzBalanced).unwrap();
        assert_eq!(part.boundaries(), oracle_boundaries(&counts, 2).as_slice());
        assert_eq!(part.boundaries(), &[0, 2, 4]);
        assert_eq!(part.worker_loads(&rp), vec![11, 11]);
    }

    #[test]
    fn single_worker_owns_everything() {
        let rp = row_ptr_from_counts(&[3, 0, 2, 5]);
        for scheme in [PartitionScheme::RowBased, PartitionScheme::NnzBalanced] {
            assert_eq!(build_row_partition(&rp, 1, scheme).unwrap().boundaries(), &[0, 4]);
        }
    }

    #[test]
    fn row_based_equal_rows() {
        let rp = row_ptr_from_counts(&[1, 1, 1, 1]);
        let part = build_row_partition(&rp, 2, PartitionScheme::RowBased).unwrap();
        assert_eq!(part.boundaries(), &[0, 2, 4]);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(build_row_partition(&[0, 1], 0, PartitionScheme::RowBased).is_err());
    }

    #[test]
    fn more_workers_than_rows() {
        let rp = row_ptr_from_counts(&[2, 2]);
        let part = build_row_partition(&rp, 5, PartitionScheme::NnzBalanced).unwrap();
        assert_eq!(part.num_workers(), 5);
        assert_eq!(part.worker_loads(&rp).iter().sum::<usize>(), 4);
    }

    fn tridiag_upper(n: usize) -> SymCsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SymCsrMatrix::from_upper_triplets(n, &t).unwrap()
    }

    #[test]
    fn tridiagonal_regions() {
        let s = tridiag_upper(8);
        let part = build_row_partition(s.row_ptr(), 2, PartitionScheme::RowBased).unwrap();
        assert_eq!(part.boundaries(), &[0, 4, 8]);
        let regions = build_reduction_regions(&s, &part).unwrap();
        assert_eq!(regions.region(0), 1..5);
        assert_eq!(regions.region(1), 5..8);
    }

    #[test]
    fn diagonal_regions_are_empty() {
        let s = SymCsrMatrix::from_diagonal(&[1.0; 6]);
        let part = build_row_partition(s.row_ptr(), 3, PartitionScheme::NnzBalanced).unwrap();
        let regions = build_reduction_regions(&s, &part).unwrap();
        assert!((0..3).all(|p| regions.is_empty(p)));
        assert_eq!(regions.total_work(), 0);
    }

    #[test]
    fn dense_first_row_reaches_end() {
        let n = 6;
        let mut t: Vec<_> = (0..n).map(|j| (0, j, 1.0)).collect();
        t.extend((1..n).map(|i| (i, i, 1.0)));
        let s = SymCsrMatrix::from_upper_triplets(n, &t).unwrap();
        let part = build_row_partition(s.row_ptr(), 2, PartitionScheme::RowBased).unwrap();
        let regions = build_reduction_regions(&s, &part).unwrap();
        assert_eq!(regions.region(0), 1..n);
        assert!(regions.is_empty(1));
    }

    #[test]
    fn mismatched_partition_rejected() {
        let s = tridiag_upper(4);
        let part = build_row_partition(&[0, 1, 2], 1, PartitionScheme::RowBased).unwrap();
        assert!(matches!(
            build_reduction_regions(&s, &part),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
