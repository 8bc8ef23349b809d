//! Generated test matrices.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{write_matrix_market, CsrMatrix, LoadedMatrix, SymCsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MatrixKind {
    /// 5-point Laplacian on a `grid × grid` interior grid.
    Poisson2d { grid: usize },
    /// `tridiag(−1, 2, −1)`.
    Laplacian1d { n: usize },
    /// Diagonal with entries log-spaced from 1 to `cond`.
    Diag { n: usize, cond: f64 },
    /// One dense row, light rows elsewhere.
    SkewedRows { n: usize },
    /// Upwinded convection-diffusion on a `grid × grid` grid; unsymmetric.
    ConvDiff2d { grid: usize, wind: f64 },
}

impl MatrixKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Poisson2d { .. } => "poisson2d",
            MatrixKind::Laplacian1d { .. } => "laplacian1d",
            MatrixKind::Diag { .. } => "diag",
            MatrixKind::SkewedRows { .. } => "skewed_rows",
            MatrixKind::ConvDiff2d { .. } => "convdiff2d",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<LoadedMatrix> {
        Ok(match *self {
            MatrixKind::Poisson2d { grid } => LoadedMatrix::Symmetric(poisson2d(grid)?),
            MatrixKind::Laplacian1d { n } => LoadedMatrix::Symmetric(laplacian1d(n)?),
            MatrixKind::Diag { n, cond } => LoadedMatrix::Symmetric(SymCsrMatrix::from_diagonal(&log_diag(n, cond)?)),
            MatrixKind::SkewedRows { n } => LoadedMatrix::General(skewed_rows(n, seed)?),
            MatrixKind::ConvDiff2d { grid, wind } => LoadedMatrix::General(convdiff2d(grid, wind)?),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>, seed: u64) -> Result<LoadedMatrix> {
        let m = self.generate(seed)?;
        write_matrix_market(path, &m)?;
        Ok(m)
    }
}

fn need(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.to_string()))
    }
}

pub fn poisson2d(grid: usize) -> Result<SymCsrMatrix> {
    need(grid >= 2, "grid must be at least 2")?;
    let n = grid * grid;
    let mut t = Vec::with_capacity(3 * n);
    for r in 0..grid {
        for c in 0..grid {
            let i = r * grid + c;
            t.push((i, i, 4.0));
            if c + 1 < grid {
                t.push((i, i + 1, -1.0));
            }
            if r + 1 < grid {
                t.push((i, i + grid, -1.0));
            }
        }
    }
    SymCsrMatrix::from_upper_triplets(n, &t)
}

pub fn laplacian1d(n: usize) -> Result<SymCsrMatrix> {
    need(n >= 2, "n must be at least 2")?;
    let mut t = Vec::with_capacity(2 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    SymCsrMatrix::from_upper_triplets(n, &t)
}

pub fn log_diag(n: usize, cond: f64) -> Result<Vec<f64>> {
    need(n >= 1, "n must be positive")?;
    need(cond >= 1.0 && cond.is_finite(), "cond must be a finite value >= 1")?;
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let step = cond.ln() / (n - 1) as f64;
    Ok((0..n).map(|i| (step * i as f64).exp()).collect())
}

/// Row 0 is dense; every other row has its diagonal, odd rows also a
/// subdiagonal entry. Diagonally dominant.
pub fn skewed_rows(n: usize, seed: u64) -> Result<CsrMatrix> {
    need(n >= 4, "n must be at least 4")?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut t = Vec::with_capacity(n * 3);
    t.push((0, 0, 2.0));
    for j in 1..n {
        t.push((0, j, rng.gen_range(0.1..1.0) / n as f64));
    }
    for i in 1..n {
        t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
        if i % 2 == 1 {
            t.push((i, i - 1, -rng.gen_range(0.5..1.0)));
        }
    }
    CsrMatrix::from_triplets(n, &t)
}

pub fn convdiff2d(grid: usize, wind: f64) -> Result<CsrMatrix> {
    need(grid >= 2, "grid must be at least 2")?;
    need(wind.is_finite() && wind >= 0.0, "wind must be nonnegative")?;
    let n = grid * grid;
    let mut t = Vec::with_capacity(5 * n);
    for r in 0..grid {
        for c in 0..grid {
            let i = r * grid + c;
            t.push((i, i, 4.0 + wind));
            if c > 0 {
                t.push((i, i - 1, -1.0 - wind));
            }
            if c + 1 < grid {
                t.push((i, i + 1, -1.0));
            }
            if r > 0 {
                t.push((i, i - grid, -1.0));
            }
            if r + 1 < grid {
                t.push((i, i + grid, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, &t)
}
