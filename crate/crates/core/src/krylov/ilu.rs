//! ILU(0): incomplete LU restricted to the sparsity pattern of `A`.
//!
//! L (unit diagonal, implicit) and U share one CRS array over A's pattern.

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct IluFactors {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag_ptr: Vec<usize>,
}

impl IluFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn diag_ptr(&self) -> &[usize] {
        &self.diag_ptr
    }

    pub fn storage_bytes(&self) -> u64 {
        let word = std::mem::size_of::<usize>() as u64;
        let nnz = self.values.len() as u64;
        8 * nnz + word * nnz + 2 * word * (self.n as u64 + 1)
    }

    /// Solves `L·U·z = r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, r.len())?;
        let mut z = r.to_vec();
        self.apply_in_place(&mut z);
        Ok(z)
    }

    pub fn apply_in_place(&self, z: &mut [f64]) {
        let (rp, ci, va, dp) = (&self.row_ptr, &self.col_idx, &self.values, &self.diag_ptr);
        for i in 0..self.n {
            let mut acc = z[i];
            for k in rp[i]..dp[i] {
                acc -= va[k] * z[ci[k]];
            }
            z[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = z[i];
            for k in dp[i] + 1..rp[i + 1] {
                acc -= va[k] * z[ci[k]];
            }
            z[i] = acc / va[dp[i]];
        }
    }
}

pub fn ilu0_factorize(matrix: &CsrMatrix) -> Result<IluFactors> {
    let n = matrix.n();
    let row_ptr = matrix.row_ptr().to_vec();
    let col_idx = matrix.col_idx().to_vec();
    let mut values = matrix.values().to_vec();

    let mut diag_ptr = vec![0; n];
    for i in 0..n {
        let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
        match cols.binary_search(&i) {
            Ok(k) => diag_ptr[i] = row_ptr[i] + k,
            Err(_) => return Err(Error::ZeroPivot { row: i }),
        }
    }
    // position of each column in the current row, usize::MAX when absent
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        for k in start..end {
            pos[col_idx[k]] = k;
        }
        for kk in start..diag_ptr[i] {
            let k = col_idx[kk];
            let pivot = values[diag_ptr[k]];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::ZeroPivot { row: k });
            }
            let lik = values[kk] / pivot;
            values[kk] = lik;
            for t in diag_ptr[k] + 1..row_ptr[k + 1] {
                let p = pos[col_idx[t]];
                if p != usize::MAX {
                    values[p] -= lik * values[t];
                }
            }
        }
        let d = values[diag_ptr[i]];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
        for k in start..end {
            pos[col_idx[k]] = usize::MAX;
        }
    }

    Ok(IluFactors {
        n,
        row_ptr,
        col_idx,
        values,
        diag_ptr,
    })
}

pub fn ilu0_apply(factors: &IluFactors, r: &[f64]) -> Result<Vec<f64>> {
    factors.apply(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d + i as f64 * 0.1));
            if i > 0 {
                t.push((i, i - 1, lo));
            }
            if i + 1 < n {
                t.push((i, i + 1, up));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    /// Dense Doolittle LU without pivoting, combined storage.
    fn dense_lu(a: &CsrMatrix) -> Vec<Vec<f64>> {
        let n = a.n();
        let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect();
        for k in 0..n {
            for i in k + 1..n {
                m[i][k] /= m[k][k];
                for j in k + 1..n {
                    m[i][j] -= m[i][k] * m[k][j];
                }
            }
        }
        m
    }

    fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let lu = dense_lu(a);
        let n = b.len();
        let mut z = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= lu[i][j] * z[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= lu[i][j] * z[j];
            }
            z[i] /= lu[i][i];
        }
        z
    }

    #[test]
    fn diagonal_factors_equal_matrix() {
        let a = CsrMatrix::from_diagonal(&[2.0, 3.0, 4.0]);
        let f = ilu0_factorize(&a).unwrap();
        assert_eq!(f.values(), a.values());
    }

    #[test]
    fn tridiagonal_is_exact_lu() {
        let a = tridiag(12, -1.0, 4.0, -2.0);
        let f = ilu0_factorize(&a).unwrap();
        let lu = dense_lu(&a);
        for i in 0..a.n() {
            for (k, (j, _)) in a.row(i).enumerate() {
                let got = f.values()[a.row_ptr()[i] + k];
                assert!((got - lu[i][j]).abs() <= 1e-12 * lu[i][j].abs().max(1.0), "({i},{j})");
            }
        }
        let r: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let z = f.apply(&r).unwrap();
        let expect = dense_solve(&a, &r);
        let err = z.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = expect.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * scale);
    }

    #[test]
    fn identity_and_zero_rhs() {
        let f = ilu0_factorize(&CsrMatrix::identity(4)).unwrap();
        assert_eq!(f.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let f = ilu0_factorize(&tridiag(5, 1.0, 3.0, 1.0)).unwrap();
        assert_eq!(f.apply(&[0.0; 5]).unwrap(), vec![0.0; 5]);
        assert!(f.apply(&[0.0; 4]).is_err());
    }

    #[test]
    fn zero_pivot_reported() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(ilu0_factorize(&a), Err(Error::ZeroPivot { row: 0 })));
        let missing = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(ilu0_factorize(&missing), Err(Error::ZeroPivot { row: 0 })));
    }

    #[test]
    fn pattern_is_preserved() {
        let mut t = vec![];
        for i in 0..20usize {
            t.push((i, i, 5.0));
            t.push((i, (i * 7 + 3) % 20, -1.0));
            t.push(((i * 3 + 1) % 20, i, -0.5));
        }
        let a = CsrMatrix::from_triplets(20, &t).unwrap();
        let f = ilu0_factorize(&a).unwrap();
        assert_eq!(f.row_ptr(), a.row_ptr());
        assert_eq!(f.col_idx(), a.col_idx());
    }
}
