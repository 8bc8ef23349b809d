//! Thread-parallel SpMV kernels and the sequential reference they are checked against.

mod operator;
mod pool;
mod sym;
mod unsym;

pub use operator::{KernelChoice, LinearOperator, MatrixRef, SpmvOperator};
pub use pool::WorkerPool;
pub use sym::{spmv_sym, spmv_sym_into, SymKernel, SymVariant};
pub use unsym::{spmv_ref, spmv_unsym, spmv_unsym_into, UnsymKernel, UnsymPlan, UnsymVariant};

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::sparse::{
        build_bss_plan, build_reduction_regions, build_row_partition, expand_symmetric, CsrMatrix, PartitionScheme,
        SymCsrMatrix,
    };

    fn random_matrix(rng: &mut impl Rng, n: usize, density: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(density) {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        num / den
    }

    #[test]
    fn reference_small_cases() {
        let i3 = CsrMatrix::identity(3);
        assert_eq!(spmv_ref(&i3, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(spmv_ref(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        let gap = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(spmv_ref(&gap, &[5.0, 5.0, 5.0]).unwrap(), vec![5.0, 0.0, 5.0]);
        assert!(spmv_ref(&i3, &[1.0]).is_err());
    }

    #[test]
    fn identity_under_every_variant() {
        let n = 37;
        let a = CsrMatrix::identity(n);
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let mut pool = WorkerPool::new(3).unwrap();
        for v in UnsymVariant::ALL {
            let plan = match v {
                UnsymVariant::U1 => UnsymPlan::Rows(build_row_partition(a.row_ptr(), 3, PartitionScheme::RowBased).unwrap()),
                UnsymVariant::U2 => {
                    UnsymPlan::Rows(build_row_partition(a.row_ptr(), 3, PartitionScheme::NnzBalanced).unwrap())
                }
                _ => UnsymPlan::Bss(build_bss_plan(&a, 8).unwrap()),
            };
            assert_eq!(spmv_unsym(v, &a, &plan, &x, &mut pool).unwrap(), x);
        }
        let s = SymCsrMatrix::from_diagonal(&vec![1.0; n]);
        for v in SymVariant::ALL {
            let scheme = if v == SymVariant::S1 {
                PartitionScheme::RowBased
            } else {
                PartitionScheme::NnzBalanced
            };
            let part = build_row_partition(s.row_ptr(), 3, scheme).unwrap();
            let regions = build_reduction_regions(&s, &part).unwrap();
            assert_eq!(spmv_sym(v, &s, &part, Some(&regions), &x, &mut pool).unwrap(), x);
        }
    }

    #[test]
    fn u2_on_skewed_rows() {
        // rows 4.. are empty so the row lengths are exactly [10, 1, 1, 10]
        let counts = [10usize, 1, 1, 10];
        let mut t = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            for j in 0..c {
                t.push((i, j, (i * 10 + j) as f64 * 0.25 - 1.0));
            }
        }
        let a = CsrMatrix::from_triplets(10, &t).unwrap();
        let mut pool = WorkerPool::new(2).unwrap();
        let x: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let part = build_row_partition(a.row_ptr(), 2, PartitionScheme::NnzBalanced).unwrap();
        assert_eq!(part.worker_loads(a.row_ptr()), vec![11, 11]);
        let y = spmv_unsym(UnsymVariant::U2, &a, &UnsymPlan::Rows(part), &x, &mut pool).unwrap();
        assert_eq!(y, spmv_ref(&a, &x).unwrap());
    }

    #[test]
    fn plan_mismatch_rejected() {
        let a = CsrMatrix::identity(4);
        let mut pool = WorkerPool::new(1).unwrap();
        let rows = UnsymPlan::Rows(build_row_partition(a.row_ptr(), 1, PartitionScheme::RowBased).unwrap());
        assert!(spmv_unsym(UnsymVariant::U3, &a, &rows, &[0.0; 4], &mut pool).is_err());
        assert!(spmv_unsym(UnsymVariant::U2, &a, &rows, &[0.0; 4], &mut pool).is_err());
        let s = SymCsrMatrix::from_diagonal(&[1.0; 4]);
        let part = build_row_partition(s.row_ptr(), 1, PartitionScheme::NnzBalanced).unwrap();
        assert!(spmv_sym(SymVariant::S3, &s, &part, None, &[0.0; 4], &mut pool).is_err());
    }

    #[test]
    fn sym_two_by_two() {
        let s = SymCsrMatrix::new(2, vec![0, 2, 3], vec![0, 1, 1], vec![2.0, 1.0, 2.0]).unwrap();
        let mut pool = WorkerPool::new(2).unwrap();
        for v in SymVariant::ALL {
            let scheme = if v == SymVariant::S1 {
                PartitionScheme::RowBased
            } else {
                PartitionScheme::NnzBalanced
            };
            let part = build_row_partition(s.row_ptr(), 2, scheme).unwrap();
            let regions = build_reduction_regions(&s, &part).unwrap();
            let y = spmv_sym(v, &s, &part, Some(&regions), &[1.0, 2.0], &mut pool).unwrap();
            assert_eq!(y, vec![4.0, 5.0]);
        }
    }

    #[test]
    fn bss_all_jl_match_reference() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 200, 0.01);
        let x: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reference = spmv_ref(&a, &x).unwrap();
        let mut pool = WorkerPool::new(4).unwrap();
        for jl in [8, 16, 32, 64, 128, 256] {
            let plan = UnsymPlan::Bss(build_bss_plan(&a, jl).unwrap());
            let u3 = spmv_unsym(UnsymVariant::U3, &a, &plan, &x, &mut pool).unwrap();
            let u4 = spmv_unsym(UnsymVariant::U4, &a, &plan, &x, &mut pool).unwrap();
            assert!(rel_diff(&u3, &reference) <= 1e-13, "jl={jl}");
            assert_eq!(u3, u4, "u3 and u4 must agree bitwise at jl={jl}");
        }
    }

    #[test]
    fn banded_s3_matches_s1_with_less_reduction() {
        let n = 1000;
        let mut t = Vec::new();
        for i in 0..n {
            for d in 0..=3 {
                if i + d < n {
                    t.push((i, i + d, if d == 0 { 4.0 } else { -1.0 / d as f64 }));
                }
            }
        }
        let s = SymCsrMatrix::from_upper_triplets(n, &t).unwrap();
        let mut pool = WorkerPool::new(8).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let p1 = build_row_partition(s.row_ptr(), 8, PartitionScheme::RowBased).unwrap();
        let p2 = build_row_partition(s.row_ptr(), 8, PartitionScheme::NnzBalanced).unwrap();
        let regions = build_reduction_regions(&s, &p2).unwrap();
        let y1 = spmv_sym(SymVariant::S1, &s, &p1, None, &x, &mut pool).unwrap();
        let y3 = spmv_sym(SymVariant::S3, &s, &p2, Some(&regions), &x, &mut pool).unwrap();
        assert!(rel_diff(&y3, &y1) <= 1e-13);
        let full = expand_symmetric(&s);
        assert!(rel_diff(&y3, &spmv_ref(&full, &x).unwrap()) <= 1e-13);
        // each worker reaches at most 3 columns past its block
        assert!(regions.total_work() <= n + 3 * 8, "work {}", regions.total_work());
        assert!(regions.total_work() * 4 < 8 * n);
    }

    #[test]
    fn repeated_calls_are_bitwise_stable() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 120, 0.05);
        let s = a.upper_triangle();
        let x: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut pool = WorkerPool::new(4).unwrap();
        let part = build_row_partition(s.row_ptr(), 4, PartitionScheme::NnzBalanced).unwrap();
        let regions = build_reduction_regions(&s, &part).unwrap();
        let first = spmv_sym(SymVariant::S3, &s, &part, Some(&regions), &x, &mut pool).unwrap();
        let s2 = spmv_sym(SymVariant::S2, &s, &part, None, &x, &mut pool).unwrap();
        assert_eq!(first, s2);
        for _ in 0..5 {
            assert_eq!(spmv_sym(SymVariant::S3, &s, &part, Some(&regions), &x, &mut pool).unwrap(), first);
        }
        let plan = UnsymPlan::Bss(build_bss_plan(&a, 16).unwrap());
        let u3 = spmv_unsym(UnsymVariant::U3, &a, &plan, &x, &mut pool).unwrap();
        for _ in 0..5 {
            assert_eq!(spmv_unsym(UnsymVariant::U3, &a, &plan, &x, &mut pool).unwrap(), u3);
        }
    }

    #[test]
    fn operator_counts_calls() {
        let a = CsrMatrix::identity(5);
        let mut op = SpmvOperator::row_based(MatrixRef::General(&a), WorkerPool::new(2).unwrap()).unwrap();
        let mut y = vec![0.0; 5];
        op.apply(&[1.0; 5], &mut y);
        op.apply(&[2.0; 5], &mut y);
        assert_eq!(op.calls(), 2);
        assert_eq!(y, vec![2.0; 5]);
        assert_eq!(MatrixRef::General(&a).flops_per_product(), 10);
        let s = SymCsrMatrix::new(2, vec![0, 2, 3], vec![0, 1, 1], vec![2.0, 1.0, 2.0]).unwrap();
        // full matrix has 4 nonzeros -> 8 flops
        assert_eq!(MatrixRef::Symmetric(&s).flops_per_product(), 8);
    }
}
