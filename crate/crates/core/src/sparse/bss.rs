//! Execution plan for segmented-scan SpMV.
//!
//! The nonzero array is cut into `jl` contiguous lanes of near-equal length,
//! and each lane is further cut at row boundaries into slices. A slice never
//! spans two rows, so summing it needs no segment test; the row it feeds is
//! fixed at plan time in `carry_map`. Rows split across lanes end up with
//! several slices, combined in slice order.

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slice {
    pub row: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BssPlan {
    jl: usize,
    slices: Vec<Slice>,
    /// Lane `l` owns slices `lane_ptr[l]..lane_ptr[l + 1]`, processed in order.
    lane_ptr: Vec<usize>,
    /// Destination row of each slice's partial sum.
    carry_map: Vec<usize>,
    /// Row `i` receives slices `row_slice_ptr[i]..row_slice_ptr[i + 1]`.
    row_slice_ptr: Vec<usize>,
    /// Head flags for the flag-driven segmented scan: true where a slice starts.
    head_flags: Vec<bool>,
    n: usize,
    nnz: usize,
}

impl BssPlan {
    pub fn jl(&self) -> usize {
        self.jl
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn lane_ptr(&self) -> &[usize] {
        &self.lane_ptr
    }

    pub fn carry_map(&self) -> &[usize] {
        &self.carry_map
    }

    pub fn row_slice_ptr(&self) -> &[usize] {
        &self.row_slice_ptr
    }

    pub fn head_flags(&self) -> &[bool] {
        &self.head_flags
    }

    pub fn lane_range(&self, lane: usize) -> std::ops::Range<usize> {
        let s = &self.slices;
        let (a, b) = (self.lane_ptr[lane], self.lane_ptr[lane + 1]);
        if a == b {
            return 0..0;
        }
        s[a].start..s[b - 1].start + s[b - 1].len
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }
}

/// Builds the plan; `jl` larger than nnz is clamped to nnz.
pub fn build_bss_plan(matrix: &CsrMatrix, jl: usize) -> Result<BssPlan> {
    if jl < 1 {
        return Err(Error::InvalidArgument("jl must be at least 1".into()));
    }
    let nnz = matrix.nnz();
    if nnz == 0 {
        return Err(Error::InvalidArgument("cannot build a segmented-scan plan for an empty matrix".into()));
    }
    let jl = jl.min(nnz);
    let row_ptr = matrix.row_ptr();
    let n = matrix.n();

    let mut slices = Vec::with_capacity(jl + n);
    let mut lane_ptr = Vec::with_capacity(jl + 1);
    lane_ptr.push(0);
    // row containing nonzero k: advanced monotonically as k grows
    let mut row = 0;
    for lane in 0..jl {
        let (lo, hi) = (lane * nnz / jl, (lane + 1) * nnz / jl);
        let mut k = lo;
        while k < hi {
            while row_ptr[row + 1] <= k {
                row += 1;
            }
            let end = row_ptr[row + 1].min(hi);
            slices.push(Slice {
                row,
                start: k,
                len: end - k,
            });
            k = end;
        }
        lane_ptr.push(slices.len());
    }

    let carry_map: Vec<usize> = slices.iter().map(|s| s.row).collect();
    let mut row_slice_ptr = vec![0usize; n + 1];
    for s in &slices {
        row_slice_ptr[s.row + 1] += 1;
    }
    for i in 0..n {
        row_slice_ptr[i + 1] += row_slice_ptr[i];
    }
    let mut head_flags = vec![false; nnz];
    for s in &slices {
        head_flags[s.start] = true;
    }

    Ok(BssPlan {
        jl,
        slices,
        lane_ptr,
        carry_map,
        row_slice_ptr,
        head_flags,
        n,
        nnz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_single_lane() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let plan = build_bss_plan(&a, 1).unwrap();
        assert_eq!(plan.num_slices(), 3);
        assert_eq!(plan.lane_ptr(), &[0, 3]);
        assert_eq!(plan.carry_map(), &[0, 1, 2]);
    }

    #[test]
    fn dense_row_two_lanes() {
        let t: Vec<_> = (0..8).map(|j| (0, j, 1.0)).collect();
        let a = CsrMatrix::from_triplets(8, &t).unwrap();
        let plan = build_bss_plan(&a, 2).unwrap();
        assert_eq!(
            plan.slices(),
            &[
                Slice { row: 0, start: 0, len: 4 },
                Slice { row: 0, start: 4, len: 4 }
            ]
        );
        assert_eq!(plan.carry_map(), &[0, 0]);
        assert_eq!(plan.row_slice_ptr()[..2], [0, 2]);
    }

    #[test]
    fn jl_clamped_to_nnz() {
        let a = CsrMatrix::identity(3);
        assert_eq!(build_bss_plan(&a, 64).unwrap().jl(), 3);
    }

    #[test]
    fn errors() {
        let a = CsrMatrix::identity(3);
        assert!(build_bss_plan(&a, 0).is_err());
        let empty = CsrMatrix::new(2, vec![0, 0, 0], vec![], vec![]).unwrap();
        assert!(build_bss_plan(&empty, 1).is_err());
    }

    #[test]
    fn empty_rows_get_no_slices() {
        let a = CsrMatrix::from_triplets(4, &[(0, 0, 1.0), (0, 3, 1.0), (3, 1, 2.0)]).unwrap();
        let plan = build_bss_plan(&a, 2).unwrap();
        assert_eq!(plan.row_slice_ptr(), &[0, 2, 2, 2, 3]);
    }
}
