//! Matrix Market coordinate I/O (`real`, `general` or `symmetric`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::csr::{expand_symmetric, CsrMatrix, SymCsrMatrix};
use crate::error::{Error, Result};

/// A loaded matrix, in whichever storage the caller asked for.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedMatrix {
    General(CsrMatrix),
    Symmetric(SymCsrMatrix),
}

impl LoadedMatrix {
    pub fn n(&self) -> usize {
        match self {
            LoadedMatrix::General(a) => a.n(),
            LoadedMatrix::Symmetric(s) => s.n(),
        }
    }

    /// Full CRS form regardless of storage.
    pub fn to_full(&self) -> CsrMatrix {
        match self {
            LoadedMatrix::General(a) => a.clone(),
            LoadedMatrix::Symmetric(s) => expand_symmetric(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>, want_symmetric: bool) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, want_symmetric)
}

/// Loads with the storage the file header declares.
pub fn load_matrix_market_auto(path: impl AsRef<Path>) -> Result<LoadedMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market_auto(&text)
}

pub fn parse_matrix_market_auto(text: &str) -> Result<LoadedMatrix> {
    let header = text.lines().next().unwrap_or("");
    let symmetric = parse_header(header)? == Symmetry::Symmetric;
    parse_matrix_market(text, symmetric)
}

pub fn parse_matrix_market(text: &str, want_symmetric: bool) -> Result<LoadedMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let symmetry = parse_header(header)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize> {
                    let tok = fields.next().ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: "size line needs rows, cols and nnz".into(),
                    })?;
                    tok.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad integer {tok:?}"),
                    })
                };
                let (rows, cols, nnz) = (next()?, next()?, next()?);
                if rows != cols {
                    return Err(Error::Unsupported(format!("non-square matrix {rows}x{cols}")));
                }
                size = Some((rows, cols, nnz));
                triplets.reserve(nnz);
            }
            Some((n, _, _)) => {
                let (r, c, v) = parse_entry(&mut fields, lineno)?;
                if r == 0 || c == 0 || r > n || c > n {
                    return Err(Error::IndexOutOfRange {
                        row: r.saturating_sub(1),
                        col: c.saturating_sub(1),
                        n,
                    });
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (n, _, declared) = size.ok_or(Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    if triplets.len() != declared {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {declared} entries, found {}", triplets.len()),
        });
    }

    match (symmetry, want_symmetric) {
        (Symmetry::Symmetric, true) => Ok(LoadedMatrix::Symmetric(SymCsrMatrix::from_upper_triplets(n, &triplets)?)),
        (Symmetry::Symmetric, false) => {
            let sym = SymCsrMatrix::from_upper_triplets(n, &triplets)?;
            Ok(LoadedMatrix::General(expand_symmetric(&sym)))
        }
        (Symmetry::General, true) => {
            let full = CsrMatrix::from_triplets(n, &triplets)?;
            if let Some((row, col)) = full.first_asymmetry() {
                return Err(Error::NotSymmetric { row, col });
            }
            Ok(LoadedMatrix::Symmetric(full.upper_triangle()))
        }
        (Symmetry::General, false) => Ok(LoadedMatrix::General(CsrMatrix::from_triplets(n, &triplets)?)),
    }
}

fn parse_header(header: &str) -> Result<Symmetry> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(bad("expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(bad("object must be 'matrix'"));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Unsupported(format!("format '{}'", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "double" => {}
        "pattern" | "complex" | "integer" => return Err(Error::Unsupported(format!("field '{}'", tokens[3]))),
        other => return Err(bad(&format!("unknown field '{other}'"))),
    }
    match tokens[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        "skew-symmetric" | "hermitian" => Err(Error::Unsupported(format!("symmetry '{}'", tokens[4]))),
        other => Err(bad(&format!("unknown symmetry '{other}'"))),
    }
}

fn parse_entry<'a>(fields: &mut impl Iterator<Item = &'a str>, line: usize) -> Result<(usize, usize, f64)> {
    let mut tok = |what: &str| {
        fields.next().ok_or_else(|| Error::Parse {
            line,
            msg: format!("missing {what}"),
        })
    };
    let (r, c, v) = (tok("row")?, tok("column")?, tok("value")?);
    let idx = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line,
            msg: format!("bad index {s:?}"),
        })
    };
    let value = v.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value {v:?}"),
    })?;
    Ok((idx(r)?, idx(c)?, value))
}

/// Serializes a general matrix; values use Rust's shortest round-trip formatting.
pub fn to_matrix_market(matrix: &CsrMatrix) -> String {
    let mut out = String::with_capacity(32 * matrix.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", matrix.n(), matrix.n(), matrix.nnz());
    for i in 0..matrix.n() {
        for (j, v) in matrix.row(i) {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    out
}

/// Serializes symmetric storage as a `symmetric` file (lower-triangle entries).
pub fn sym_to_matrix_market(matrix: &SymCsrMatrix) -> String {
    let u = matrix.upper();
    let mut out = String::with_capacity(32 * u.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", u.n(), u.n(), u.nnz());
    for i in 0..u.n() {
        for (j, v) in u.row(i) {
            let _ = writeln!(out, "{} {} {:e}", j + 1, i + 1, v);
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, matrix: &LoadedMatrix) -> Result<()> {
    let path = path.as_ref();
    let text = match matrix {
        LoadedMatrix::General(a) => to_matrix_market(a),
        LoadedMatrix::Symmetric(s) => sym_to_matrix_market(s),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
