//! Restarted GMRES(m) with right preconditioning.
//!
//! Each cycle builds an Arnoldi basis with the configured Gram-Schmidt
//! variant and tracks the residual through Givens rotations. The residual
//! norm at the end of every cycle is fed to the restart controller, which may
//! grow the cycle length for the next one.

use std::time::Instant;

use super::config::{workspace, KrylovConfig, RestartEvent, SolverResult, Termination};
use super::ilu::IluFactors;
use super::ortho::orthogonalize_in_place;
use super::residual::true_residual_with;
use super::vecops::{axpy, norm2};
use crate::autotune::RestartController;
use crate::error::{check_len, Result};
use crate::spmv::LinearOperator;

pub fn gmres_m(
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
    let m_cap = cfg.m_max.min(n.max(1));
    let mut controller = match cfg.restart_tuning {
        Some(t) => Some(RestartController::new(cfg.restart_m.min(m_cap), m_cap, t)?),
        None => None,
    };
    let mut msize = cfg.restart_m.min(m_cap);
    let mut peak_m = msize;

    let mut result = SolverResult {
        x: Vec::new(),
        converged: false,
        termination: Termination::MaxIterations,
        iterations: 0,
        restarts: Vec::new(),
        msize_trajectory: vec![msize],
        residual_history: Vec::new(),
        recurrence_residual: f64::NAN,
        true_residual: f64::NAN,
        fault_convergence: false,
        elapsed: 0.0,
        workspace_bytes: 0,
    };

    if bnorm == 0.0 {
        x.fill(0.0);
        result.converged = true;
        result.termination = Termination::Converged;
        result.recurrence_residual = 0.0;
        result.true_residual = 0.0;
        result.x = x;
        result.workspace_bytes = workspace::arnoldi_bytes(n, msize);
        result.elapsed = start.elapsed().as_secs_f64();
        return Ok(result);
    }

    let mut ax = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    'cycles: loop {
        op.apply(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        result.recurrence_residual = beta / bnorm;
        if beta / bnorm < cfg.tol {
            result.converged = true;
            result.termination = Termination::Converged;
            break;
        }

        let m = msize;
        peak_m = peak_m.max(m);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // column j of the rotated Hessenberg, length j + 2
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut stop: Option<Termination> = None;

        for j in 0..m {
            z.copy_from_slice(&basis[j]);
            if let Some(p) = precond {
                p.apply_in_place(&mut z);
            }
            op.apply(&z, &mut w);
            let mut h = vec![0.0; j + 2];
            let breakdown = orthogonalize_in_place(cfg.ortho, &basis, &mut w, &mut h);

            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let (c, s) = givens(h[j], h[j + 1]);
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cols.push(h);

            result.iterations += 1;
            let rec = g[j + 1].abs() / bnorm;
            result.residual_history.push(rec);
            result.recurrence_residual = rec;

            if breakdown {
                // invariant Krylov subspace: the least-squares solution is exact
                stop = Some(Termination::Converged);
                break;
            }
            if rec < cfg.tol {
                stop = Some(Termination::Converged);
                break;
            }
            if result.iterations >= cfg.max_iters {
                stop = Some(Termination::MaxIterations);
                break;
            }
            if start.elapsed() > cfg.max_time {
                stop = Some(Termination::Timeout);
                break;
            }
            basis.push(w.clone());
        }

        // x += M⁻¹ V y with R y = g
        let k = cols.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (jj, col) in cols.iter().enumerate().skip(i + 1) {
                acc -= col[i] * y[jj];
            }
            y[i] = acc / cols[i][i];
        }
        z.fill(0.0);
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut z);
        }
        if let Some(p) = precond {
            p.apply_in_place(&mut z);
        }
        axpy(1.0, &z, &mut x);

        if let Some(t) = stop {
            result.converged = t == Termination::Converged;
            result.termination = t;
            break 'cycles;
        }

        if let Some(c) = controller.as_mut() {
            let sample = result.recurrence_residual;
            if c.observe(sample)?.is_some() {
                result.msize_trajectory.push(c.msize());
            }
            msize = c.msize();
        }
        result.restarts.push(RestartEvent {
            iteration: result.iterations,
            msize,
        });
    }

    result.true_residual = true_residual_with(op, &x, b)?;
    result.finish_accuracy(cfg.tol);
    result.workspace_bytes = workspace::arnoldi_bytes(n, peak_m);
    result.x = x;
    result.elapsed = start.elapsed().as_secs_f64();
    Ok(result)
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}
