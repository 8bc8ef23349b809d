//! BiCGStab (van der Vorst form) with right preconditioning.

use std::time::Instant;

use super::config::{workspace, KrylovConfig, SolverResult, Termination};
use super::ilu::IluFactors;
use super::residual::true_residual_with;
use super::vecops::{axpy, dot, norm2};
use crate::error::{check_len, Result};
use crate::spmv::LinearOperator;

const BREAKDOWN_RATIO: f64 = 1e-14;

pub fn bicgstab(
    op: &mut dyn LinearOperator,
    precond: Option<&IluFactors>,
    b: &[f64],
    cfg: &KrylovConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    let n = op.dim();
    check_len(n, b.len())?;
    if let Some(p) = precond {
        check_len(n, p.n())?;
    }
    let start = Instant::now();
    let mut x = match &cfg.initial_guess {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.clone()
        }
        None => vec![0.0; n],
    };
    let bnorm = norm2(b);
    let mut result = SolverResult {
        x: Vec::new(),
        converged: false,
        termination: Termination::MaxIterations,
        iterations: 0,
        restarts: Vec::new(),
        msize_trajectory: Vec::new(),
        residual_history: Vec::new(),
        recurrence_residual: f64::NAN,
        true_residual: f64::NAN,
        fault_convergence: false,
        elapsed: 0.0,
        workspace_bytes: workspace::bicgstab_bytes(n),
    };
    if bnorm == 0.0 {
        x.fill(0.0);
        result.converged = true;
        result.termination = Termination::Converged;
        result.recurrence_residual = 0.0;
        result.true_residual = 0.0;
        result.x = x;
        result.elapsed = start.elapsed().as_secs_f64();
        return Ok(result);
    }

    let precondition = |src: &[f64], dst: &mut [f64]| {
        dst.copy_from_slice(src);
        if let Some(p) = precond {
            p.apply_in_place(dst);
        }
    };

    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let r_hat = r.clone();
    let r_hat_norm = norm2(&r_hat);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho_prev, mut alpha, mut omega) = (1.0, 1.0, 1.0);

    result.recurrence_residual = norm2(&r) / bnorm;
    if result.recurrence_residual < cfg.tol {
        result.converged = true;
        result.termination = Termination::Converged;
    }

    while !result.converged {
        if result.iterations >= cfg.max_iters {
            result.termination = Termination::MaxIterations;
            break;
        }
        if start.elapsed() > cfg.max_time {
            result.termination = Termination::Timeout;
            break;
        }
        let rho = dot(&r_hat, &r);
        if rho.abs() < BREAKDOWN_RATIO * r_hat_norm * norm2(&r) {
            result.termination = Termination::Breakdown("rho".into());
            break;
        }
        let beta = (rho / rho_prev) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precondition(&p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv.abs() < BREAKDOWN_RATIO * r_hat_norm * norm2(&v) || rv == 0.0 {
            result.termination = Termination::Breakdown("r_hat orthogonal to A·p".into());
            break;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        result.iterations += 1;
        let s_norm = norm2(&s);
        if s_norm / bnorm < cfg.tol {
            axpy(alpha, &p_hat, &mut x);
            result.recurrence_residual = s_norm / bnorm;
            result.residual_history.push(result.recurrence_residual);
            result.converged = true;
            result.termination = Termination::Converged;
            break;
        }
        precondition(&s, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        if omega.abs() * tt.sqrt() < BREAKDOWN_RATIO * s_norm {
            // keep the half step so the iterate is not wasted
            axpy(alpha, &p_hat, &mut x);
            result.recurrence_residual = s_norm / bnorm;
            result.residual_history.push(result.recurrence_residual);
            result.termination = Termination::Breakdown("omega".into());
            break;
        }
        axpy(alpha, &p_hat, &mut x);
        axpy(omega, &s_hat, &mut x);
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        rho_prev = rho;
        result.recurrence_residual = norm2(&r) / bnorm;
        result.residual_history.push(result.recurrence_residual);
        if result.recurrence_residual < cfg.tol {
            result.converged = true;
            result.termination = Termination::Converged;
        }
    }

    result.true_residual = true_residual_with(op, &x, b)?;
    result.finish_accuracy(cfg.tol);
    result.x = x;
    result.elapsed = start.elapsed().as_secs_f64();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::ilu::ilu0_factorize;
    use crate::sparse::CsrMatrix;

    #[test]
    fn identity_in_one_sweep() {
        let mut a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 4.0];
        let res = bicgstab(&mut a, None, &b, &KrylovConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.x, b);
    }

    #[test]
    fn zero_rhs() {
        let mut a = CsrMatrix::identity(3);
        let res = bicgstab(&mut a, None, &[0.0; 3], &KrylovConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, vec![0.0; 3]);
    }

    #[test]
    fn spd_tridiagonal_with_ilu() {
        let n = 100;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let mut a = CsrMatrix::from_triplets(n, &t).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b = crate::spmv::spmv_ref(&a, &xs).unwrap();
        let f = ilu0_factorize(&a).unwrap();
        let res = bicgstab(&mut a, Some(&f), &b, &KrylovConfig::default()).unwrap();
        assert!(res.converged);
        let err = res.x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        // unpreconditioned also converges
        let res = bicgstab(&mut a, None, &b, &KrylovConfig::default()).unwrap();
        assert!(res.converged && res.true_residual < 1e-7);
    }
}
