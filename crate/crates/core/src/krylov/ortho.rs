//! Gram-Schmidt orthogonalization of a new vector against an orthonormal basis.

use serde::{Serialize, Serializer};

use super::vecops::{axpy, dot, norm2};
use crate::error::{check_len, Result};

pub const BCGS_DEFAULT_BLOCK: usize = 4;
const BREAKDOWN_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthoVariant {
    /// One classical pass.
    Cgs,
    /// Sequential projections.
    Mgs,
    /// Classical pass applied twice.
    Dgks,
    /// Classical within blocks of `block_len` columns, modified across blocks.
    Bcgs { block_len: usize },
}

impl OrthoVariant {
    pub fn bcgs() -> Self {
        OrthoVariant::Bcgs {
            block_len: BCGS_DEFAULT_BLOCK,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrthoVariant::Cgs => "cgs",
            OrthoVariant::Mgs => "mgs",
            OrthoVariant::Dgks => "dgks",
            OrthoVariant::Bcgs { .. } => "bcgs",
        }
    }

    pub fn block_len(self) -> Option<usize> {
        match self {
            OrthoVariant::Bcgs { block_len } => Some(block_len),
            _ => None,
        }
    }
}

impl Serialize for OrthoVariant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Orthogonalized {
    /// Unit vector; `None` on breakdown.
    pub q: Option<Vec<f64>>,
    /// Projection coefficients followed by the normalization factor.
    pub h: Vec<f64>,
    pub breakdown: bool,
}

pub fn orthogonalize(variant: OrthoVariant, basis: &[Vec<f64>], v: &[f64]) -> Result<Orthogonalized> {
    for q in basis {
        check_len(v.len(), q.len())?;
    }
    let mut w = v.to_vec();
    let mut h = vec![0.0; basis.len() + 1];
    let breakdown = orthogonalize_in_place(variant, basis, &mut w, &mut h);
    Ok(Orthogonalized {
        q: (!breakdown).then_some(w),
        h,
        breakdown,
    })
}

/// Orthogonalizes `w` against `basis` and normalizes it. `h` receives the
/// `basis.len()` coefficients and then the norm. Returns true on breakdown,
/// in which case `w` holds the unnormalized remainder.
pub fn orthogonalize_in_place(variant: OrthoVariant, basis: &[Vec<f64>], w: &mut [f64], h: &mut [f64]) -> bool {
    let k = basis.len();
    debug_assert!(h.len() > k);
    let input_norm = norm2(w);
    h[..=k].fill(0.0);
    match variant {
        OrthoVariant::Cgs => classical_pass(basis, w, &mut h[..k]),
        OrthoVariant::Dgks => {
            classical_pass(basis, w, &mut h[..k]);
            classical_pass(basis, w, &mut h[..k]);
        }
        OrthoVariant::Mgs => {
            for (j, q) in basis.iter().enumerate() {
                let c = dot(q, w);
                axpy(-c, q, w);
                h[j] += c;
            }
        }
        OrthoVariant::Bcgs { block_len } => {
            let block_len = block_len.max(1);
            let mut start = 0;
            while start < k {
                let end = (start + block_len).min(k);
                classical_pass(&basis[start..end], w, &mut h[start..end]);
                start = end;
            }
        }
    }
    let norm = norm2(w);
    h[k] = norm;
    if norm <= BREAKDOWN_RATIO * input_norm || norm == 0.0 {
        return true;
    }
    for wi in w.iter_mut() {
        *wi /= norm;
    }
    false
}

/// All coefficients from the same `w`, then one combined update; adds into `h`.
fn classical_pass(basis: &[Vec<f64>], w: &mut [f64], h: &mut [f64]) {
    let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
    for (q, &c) in basis.iter().zip(&coeffs) {
        axpy(-c, q, w);
    }
    for (hj, c) in h.iter_mut().zip(coeffs) {
        *hj += c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [OrthoVariant; 4] = [
        OrthoVariant::Cgs,
        OrthoVariant::Mgs,
        OrthoVariant::Dgks,
        OrthoVariant::Bcgs { block_len: 4 },
    ];

    #[test]
    fn empty_basis_normalizes() {
        for v in ALL {
            let o = orthogonalize(v, &[], &[3.0, 4.0]).unwrap();
            assert_eq!(o.h, vec![5.0]);
            assert_eq!(o.q.unwrap(), vec![0.6, 0.8]);
        }
    }

    #[test]
    fn vector_in_span_breaks_down() {
        for v in ALL {
            let o = orthogonalize(v, &[vec![1.0, 0.0, 0.0]], &[1.0, 0.0, 0.0]).unwrap();
            assert!(o.breakdown);
            assert!(o.q.is_none());
        }
    }

    #[test]
    fn hand_worked_projection() {
        // v = e1 + e2 against {e1}: coefficient 1, remainder e2 of norm 1
        for v in ALL {
            let o = orthogonalize(v, &[vec![1.0, 0.0, 0.0]], &[1.0, 1.0, 0.0]).unwrap();
            assert_eq!(o.h, vec![1.0, 1.0], "{v:?}");
            assert_eq!(o.q.unwrap(), vec![0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(orthogonalize(OrthoVariant::Mgs, &[vec![1.0, 0.0]], &[1.0, 0.0, 0.0]).is_err());
    }
}
