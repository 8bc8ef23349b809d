use crate::error::{Error, Result};

/// Square sparse matrix in compressed row storage.
///
/// Column indices are strictly increasing within each row; kernels and plans
/// rely on that ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        validate(n, &row_ptr, &col_idx, &values)?;
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from unsorted `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange { row: r, col: c, n });
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
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

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.n).map(|i| self.row_nnz(i)).max().unwrap_or(0)
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                triplets.push((j, i, v));
            }
        }
        Self::from_triplets(self.n, &triplets).expect("transpose of a valid matrix is valid")
    }

    /// Exact structural and numerical symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.first_asymmetry().is_none()
    }

    pub(crate) fn first_asymmetry(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let r = self.row_ptr[j]..self.row_ptr[j + 1];
                match self.col_idx[r.clone()].binary_search(&i) {
                    Ok(k) if self.values[r.start + k] == v => {}
                    _ => return Some((i, j)),
                }
            }
        }
        None
    }

    /// Keeps the diagonal and strictly upper triangle.
    pub fn upper_triangle(&self) -> SymCsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j >= i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SymCsrMatrix {
            inner: CsrMatrix {
                n: self.n,
                row_ptr,
                col_idx,
                values,
            },
        }
    }

    /// ‖A‖₁, the maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut col_sums = vec![0.0; self.n];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            col_sums[j] += v.abs();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Bytes held by the three CRS arrays.
    pub fn storage_bytes(&self) -> u64 {
        let word = std::mem::size_of::<usize>() as u64;
        8 * self.nnz() as u64 + word * self.nnz() as u64 + word * (self.n as u64 + 1)
    }
}

fn validate(n: usize, row_ptr: &[usize], col_idx: &[usize], values: &[f64]) -> Result<()> {
    if row_ptr.len() != n + 1 {
        return Err(Error::InvalidStructure(format!(
            "row_ptr has length {}, expected {}",
            row_ptr.len(),
            n + 1
        )));
    }
    if row_ptr[0] != 0 {
        return Err(Error::InvalidStructure("row_ptr[0] must be 0".into()));
    }
    if col_idx.len() != values.len() || row_ptr[n] != values.len() {
        return Err(Error::InvalidStructure(format!(
            "row_ptr[n]={} but col_idx/values have lengths {}/{}",
            row_ptr[n],
            col_idx.len(),
            values.len()
        )));
    }
    for i in 0..n {
        if row_ptr[i + 1] < row_ptr[i] {
            return Err(Error::InvalidStructure(format!("row_ptr decreases at row {i}")));
        }
        let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
        for (k, &c) in cols.iter().enumerate() {
            if c >= n {
                return Err(Error::IndexOutOfRange { row: i, col: c, n });
            }
            if k > 0 && cols[k - 1] >= c {
                return Err(Error::InvalidStructure(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
        }
    }
    Ok(())
}

/// Symmetric matrix stored as its diagonal plus strict upper triangle `U`,
/// representing `A = U + Uᵀ − diag(U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCsrMatrix {
    inner: CsrMatrix,
}

impl SymCsrMatrix {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let inner = CsrMatrix::new(n, row_ptr, col_idx, values)?;
        Self::from_upper(inner)
    }

    /// Wraps a CRS matrix that already holds only the upper triangle.
    pub fn from_upper(inner: CsrMatrix) -> Result<Self> {
        for i in 0..inner.n {
            if let Some(&c) = inner.col_idx[inner.row_ptr[i]..inner.row_ptr[i + 1]].first() {
                if c < i {
                    return Err(Error::InvalidStructure(format!(
                        "symmetric storage holds lower entry ({i}, {c})"
                    )));
                }
            }
        }
        Ok(Self { inner })
    }

    /// Upper-triangle triplets; lower ones are mirrored and duplicates summed.
    pub fn from_upper_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mirrored: Vec<_> = triplets
            .iter()
            .map(|&(r, c, v)| if r <= c { (r, c, v) } else { (c, r, v) })
            .collect();
        Self::from_upper(CsrMatrix::from_triplets(n, &mirrored)?)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            inner: CsrMatrix::from_diagonal(diag),
        }
    }

    pub fn upper(&self) -> &CsrMatrix {
        &self.inner
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Stored (upper-triangle) nonzeros.
    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.inner.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.inner.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.inner.values
    }

    pub fn storage_bytes(&self) -> u64 {
        self.inner.storage_bytes()
    }

    /// Nonzeros of the full matrix `U + Uᵀ − diag(U)`.
    pub fn full_nnz(&self) -> usize {
        let diag = (0..self.n())
            .filter(|&i| self.inner.col_idx[self.inner.row_ptr[i]..self.inner.row_ptr[i + 1]].first() == Some(&i))
            .count();
        2 * self.nnz() - diag
    }
}

/// Full CRS of `U + Uᵀ − diag(U)`; values are exact copies of the stored ones.
pub fn expand_symmetric(matrix: &SymCsrMatrix) -> CsrMatrix {
    let u = matrix.upper();
    let n = u.n();
    let mut counts = vec![0usize; n + 1];
    for i in 0..n {
        for (j, _) in u.row(i) {
            counts[i + 1] += 1;
            if j != i {
                counts[j + 1] += 1;
            }
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let row_ptr = counts.clone();
    let mut next = counts;
    let nnz = row_ptr[n];
    let mut col_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    // Rows are filled in increasing source-row order: lower entries (i, j<i)
    // arrive from earlier source rows j before row i's own upper entries, so
    // columns come out sorted.
    for i in 0..n {
        for (j, v) in u.row(i) {
            let k = next[i];
            col_idx[k] = j;
            values[k] = v;
            next[i] += 1;
            if j != i {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
    }
    CsrMatrix::new(n, row_ptr, col_idx, values).expect("expansion of valid symmetric storage")
}
