//! Residuals recomputed from scratch, independent of any solver recurrence.

use num_complex::Complex64;

use super::config::EigenVector;
use super::vecops::{dot, norm2};
use crate::error::{check_len, Result};
use crate::spmv::LinearOperator;

/// `‖b − A·x‖₂ / ‖b‖₂`; the unscaled norm when `b = 0`.
pub fn true_residual_linear(op: &mut dyn LinearOperator, x: &[f64], b: &[f64]) -> Result<f64> {
    true_residual_with(op, x, b)
}

pub(crate) fn true_residual_with(op: &mut dyn LinearOperator, x: &[f64], b: &[f64]) -> Result<f64> {
    let n = op.dim();
    check_len(n, x.len())?;
    check_len(n, b.len())?;
    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let r: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    let bn = norm2(b);
    Ok(if bn > 0.0 { r / bn } else { r })
}

/// `‖A·v − λ·v‖₂` for a real pair.
pub fn true_residual_eigen(op: &mut dyn LinearOperator, lambda: f64, v: &[f64]) -> Result<f64> {
    let n = op.dim();
    check_len(n, v.len())?;
    let mut av = vec![0.0; n];
    op.apply(v, &mut av);
    Ok(av.iter().zip(v).map(|(a, vi)| (a - lambda * vi).powi(2)).sum::<f64>().sqrt())
}

/// `‖A·v − λ·v‖₂` for a possibly complex pair `v = re + i·im`.
pub fn true_residual_eigen_pair(op: &mut dyn LinearOperator, lambda: Complex64, v: &EigenVector) -> Result<f64> {
    match v {
        EigenVector::Real(v) => true_residual_eigen(op, lambda.re, v),
        EigenVector::Complex { re, im } => {
            let n = op.dim();
            check_len(n, re.len())?;
            check_len(n, im.len())?;
            let (a, b) = (lambda.re, lambda.im);
            let mut are = vec![0.0; n];
            let mut aim = vec![0.0; n];
            op.apply(re, &mut are);
            op.apply(im, &mut aim);
            let mut acc = 0.0;
            for i in 0..n {
                let rr = are[i] - a * re[i] + b * im[i];
                let ri = aim[i] - a * im[i] - b * re[i];
                acc += rr * rr + ri * ri;
            }
            Ok(acc.sqrt())
        }
    }
}

/// Rayleigh quotient `vᵀAv / vᵀv`.
pub fn rayleigh_quotient(op: &mut dyn LinearOperator, v: &[f64]) -> Result<f64> {
    check_len(op.dim(), v.len())?;
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    Ok(dot(v, &av) / dot(v, v))
}
