//! Explicitly restarted Lanczos and Arnoldi eigensolvers with locking.
//!
//! Each cycle builds an `m`-step basis orthogonal to the locked vectors,
//! solves the small projected eigenproblem, locks Ritz pairs whose residual
//! estimate `|β·y_m|` is below tolerance (in wanted order), and restarts from
//! the leading unconverged Ritz vector. A final Rayleigh-Ritz step over the locked
//! basis produces the reported pairs. Eigenvalues are wanted by largest
//! magnitude.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::config::{workspace, EigenResult, EigenVector, KrylovConfig, RestartEvent, Termination};
use super::ortho::{orthogonalize_in_place, OrthoVariant};
use super::residual::true_residual_eigen_pair;
use super::vecops::{axpy, dot, norm2};
use crate::autotune::RestartController;
use crate::error::{check_len, Error, Result};
use crate::spmv::LinearOperator;

/// Output of a plain Arnoldi run: `A·Q[..steps] = Q·H` with `H` of size `(steps + 1) × steps`.
#[derive(Debug, Clone)]
pub struct ArnoldiFactorization {
    pub q: Vec<Vec<f64>>,
    pub h: DMatrix<f64>,
    pub steps: usize,
    /// The subspace became invariant; `q` then holds only `steps` vectors.
    pub breakdown: bool,
}

/// Runs up to `m` Arnoldi steps from `v0` (normalized internally).
pub fn arnoldi_process(
    op: &mut dyn LinearOperator,
    v0: &[f64],
    m: usize,
    ortho: OrthoVariant,
) -> Result<ArnoldiFactorization> {
    let n = op.dim();
    check_len(n, v0.len())?;
    let nv = norm2(v0);
    if nv == 0.0 {
        return Err(Error::InvalidArgument("zero start vector".into()));
    }
    let start: Vec<f64> = v0.iter().map(|v| v / nv).collect();
    let mut budget = Budget::unlimited();
    let mut all = Vec::new();
    let b = build_basis(op, &mut all, 0, start, m.min(n), ortho, &mut budget);
    Ok(ArnoldiFactorization {
        q: all,
        h: b.h,
        steps: b.steps,
        breakdown: b.breakdown,
    })
}

pub fn lanczos_restarted(op: &mut dyn LinearOperator, k: usize, cfg: &KrylovConfig) -> Result<EigenResult> {
    restarted(op, k, cfg, true)
}

pub fn arnoldi_restarted(op: &mut dyn LinearOperator, k: usize, cfg: &KrylovConfig) -> Result<EigenResult> {
    restarted(op, k, cfg, false)
}

struct Budget {
    iterations: usize,
    max_iters: usize,
    start: Instant,
    max_time: std::time::Duration,
    stopped: Option<Termination>,
}

impl Budget {
    fn unlimited() -> Self {
        Budget {
            iterations: 0,
            max_iters: usize::MAX,
            start: Instant::now(),
            max_time: std::time::Duration::MAX,
            stopped: None,
        }
    }

    /// Counts one step; false once a limit is hit.
    fn tick(&mut self) -> bool {
        self.iterations += 1;
        if self.iterations >= self.max_iters {
            self.stopped = Some(Termination::MaxIterations);
        } else if self.start.elapsed() > self.max_time {
            self.stopped = Some(Termination::Timeout);
        }
        self.stopped.is_none()
    }
}

struct Basis {
    h: DMatrix<f64>,
    steps: usize,
    breakdown: bool,
}

/// Extends `all` (whose first `nl` entries are locked vectors) with an
/// orthonormal Krylov basis started at the unit vector `v0`.
fn build_basis(
    op: &mut dyn LinearOperator,
    all: &mut Vec<Vec<f64>>,
    nl: usize,
    v0: Vec<f64>,
    m: usize,
    ortho: OrthoVariant,
    budget: &mut Budget,
) -> Basis {
    let n = v0.len();
    all.push(v0);
    let mut h = DMatrix::zeros(m + 1, m);
    let mut w = vec![0.0; n];
    let mut coeffs = Vec::new();
    let mut steps = 0;
    let mut breakdown = false;
    for j in 0..m {
        op.apply(&all[nl + j], &mut w);
        coeffs.clear();
        coeffs.resize(all.len() + 1, 0.0);
        let bd = orthogonalize_in_place(ortho, all, &mut w, &mut coeffs);
        for i in 0..=j {
            h[(i, j)] = coeffs[nl + i];
        }
        steps = j + 1;
        let go_on = budget.tick();
        if bd {
            breakdown = true;
            break;
        }
        h[(j + 1, j)] = coeffs[all.len()];
        all.push(w.clone());
        if !go_on {
            break;
        }
    }
    let h = h.rows(0, steps + 1).columns(0, steps).into_owned();
    Basis { h, steps, breakdown }
}

#[derive(Debug, Clone)]
struct Ritz {
    value: Complex64,
    y: DVector<Complex64>,
}

/// Real or conjugate-pair group of Ritz values, in wanted order.
#[derive(Debug, Clone, Copy)]
enum Item {
    Real(usize),
    Pair(usize),
}

impl Item {
    fn count(self) -> usize {
        match self {
            Item::Real(_) => 1,
            Item::Pair(_) => 2,
        }
    }

    fn index(self) -> usize {
        match self {
            Item::Real(i) | Item::Pair(i) => i,
        }
    }
}

fn is_real(z: Complex64, scale: f64) -> bool {
    z.im.abs() <= 1e-13 * scale.max(z.norm()).max(1e-300)
}

fn sort_by_magnitude(pairs: &mut [Ritz]) {
    pairs.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(b.value.re.total_cmp(&a.value.re))
            .then(b.value.im.total_cmp(&a.value.im))
    });
}

fn group(pairs: &mut [Ritz], scale: f64) -> Vec<Item> {
    let mut items = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        if is_real(pairs[i].value, scale) {
            pairs[i].value.im = 0.0;
            items.push(Item::Real(i));
            i += 1;
            continue;
        }
        if pairs[i].value.im < 0.0 {
            pairs[i].value = pairs[i].value.conj();
            pairs[i].y = pairs[i].y.map(|z| z.conj());
        }
        items.push(Item::Pair(i));
        let partner = i + 1 < pairs.len() && !is_real(pairs[i + 1].value, scale) && {
            let d = pairs[i + 1].value - pairs[i].value.conj();
            d.norm() <= 1e-8 * pairs[i].value.norm().max(scale)
        };
        i += if partner { 2 } else { 1 };
    }
    items
}

/// Eigenpairs of a small real matrix; vectors by inverse iteration.
fn dense_eig(g: &DMatrix<f64>) -> Vec<Ritz> {
    let m = g.nrows();
    let values = g.clone().complex_eigenvalues();
    let scale = g.norm().max(f64::MIN_POSITIVE);
    let gc: DMatrix<Complex64> = g.map(|v| Complex64::new(v, 0.0));
    let mut out: Vec<Ritz> = Vec::with_capacity(m);
    for &lam in values.iter() {
        let cluster: Vec<DVector<Complex64>> = out
            .iter()
            .filter(|r| (r.value - lam).norm() <= 1e-8 * scale)
            .map(|r| r.y.clone())
            .collect();
        let y = inverse_iteration(&gc, lam, scale, &cluster);
        out.push(Ritz { value: lam, y });
    }
    out
}

fn inverse_iteration(
    g: &DMatrix<Complex64>,
    lam: Complex64,
    scale: f64,
    cluster: &[DVector<Complex64>],
) -> DVector<Complex64> {
    let m = g.nrows();
    let project = |x: &mut DVector<Complex64>| {
        for c in cluster {
            let coef = c.dotc(x);
            *x -= c * coef;
        }
        let nx = x.norm();
        if nx > 0.0 {
            *x /= Complex64::new(nx, 0.0);
        }
    };
    let mut x = DVector::from_fn(m, |i, _| Complex64::new(1.0 + 0.37 * (i as f64 + 1.0).sin(), 0.0));
    project(&mut x);
    let mut delta = 1e-10 * scale;
    for _ in 0..6 {
        let mut shifted = g.clone();
        for i in 0..m {
            shifted[(i, i)] -= lam + Complex64::new(delta, 0.0);
        }
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(next) if next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    x = next;
                    project(&mut x);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            break;
        }
        delta *= 100.0;
    }
    x
}

fn symmetric_eig(t: &DMatrix<f64>) -> Vec<Ritz> {
    let e = SymmetricEigen::new(t.clone());
    (0..t.nrows())
        .map(|i| Ritz {
            value: Complex64::new(e.eigenvalues[i], 0.0),
            y: e.eigenvectors.column(i).map(|v| Complex64::new(v, 0.0)),
        })
        .collect()
}

/// Real and imaginary parts of `Σ y_i·v_i`.
fn combine(basis: &[Vec<f64>], y: &DVector<Complex64>) -> (Vec<f64>, Vec<f64>) {
    let n = basis.first().map_or(0, Vec::len);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for (v, c) in basis.iter().zip(y.iter()) {
        axpy(c.re, v, &mut re);
        axpy(c.im, v, &mut im);
    }
    (re, im)
}

/// Orthonormalizes `v` against `locked`; `None` if nothing independent remains.
fn orth_against(locked: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    if norm2(&v) == 0.0 {
        return None;
    }
    let mut h = vec![0.0; locked.len() + 1];
    let bd = orthogonalize_in_place(OrthoVariant::Dgks, locked, &mut v, &mut h);
    // reject vectors that were mostly inside the locked span
    if bd || !v.iter().all(|x| x.is_finite()) {
        return None;
    }
    Some(v)
}

fn fresh_vector(rng: &mut StdRng, locked: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(q) = orth_against(locked, v) {
            return Some(q);
        }
    }
    None
}

fn restarted(op: &mut dyn LinearOperator, k: usize, cfg: &KrylovConfig, symmetric: bool) -> Result<EigenResult> {
    cfg.validate()?;
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k={k} must lie in [1, n={n}]")));
    }
    let m_cap = cfg.m_max.min(n);
    let mut msize = cfg.restart_m.min(m_cap);
    if msize < (k + 2).min(n) {
        return Err(Error::InvalidArgument(format!(
            "restart_m {} must be at least k + 2 = {}",
            cfg.restart_m,
            k + 2
        )));
    }
    let solver = if symmetric { "lanczos" } else { "arnoldi" };
    let start = Instant::now();
    let mut controller = match cfg.restart_tuning {
        Some(t) => Some(RestartController::new(msize, m_cap, t)?),
        None => None,
    };
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut budget = Budget {
        iterations: 0,
        max_iters: cfg.max_iters,
        start,
        max_time: cfg.max_time,
        stopped: None,
    };

    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut pending: Vec<Vec<f64>> = Vec::new();
    let mut lock_estimates: Vec<f64> = Vec::new();
    let mut restarts = Vec::new();
    let mut msize_trajectory = vec![msize];
    let mut residual_history = Vec::new();
    let mut peak_m = msize;
    let mut termination = Termination::Converged;

    let mut v0 = fresh_vector(&mut rng, &locked, n)
        .ok_or_else(|| Error::Breakdown { solver, reason: "no start vector".into() })?;

    while locked.len() < k {
        let nl = locked.len();
        let m_eff = msize.min(n - nl);
        peak_m = peak_m.max(m_eff);
        let mut all = std::mem::take(&mut locked);
        let basis = build_basis(op, &mut all, nl, v0, m_eff, cfg.ortho, &mut budget);
        let vbasis = all.split_off(nl);
        locked = all;
        let steps = basis.steps;
        let beta = if basis.breakdown { 0.0 } else { basis.h[(steps, steps - 1)].abs() };
        let hm = basis.h.rows(0, steps).into_owned();

        let mut ritz = if symmetric {
            let mut t = DMatrix::zeros(steps, steps);
            for j in 0..steps {
                t[(j, j)] = hm[(j, j)];
                if j + 1 < steps {
                    t[(j + 1, j)] = hm[(j + 1, j)];
                    t[(j, j + 1)] = hm[(j + 1, j)];
                }
            }
            symmetric_eig(&t)
        } else {
            dense_eig(&hm)
        };
        let scale = hm.norm();
        sort_by_magnitude(&mut ritz);
        let items = group(&mut ritz, scale);

        let need = k - locked.len();
        let mut wanted = Vec::new();
        let mut count = 0;
        for &it in &items {
            if count >= need {
                break;
            }
            wanted.push(it);
            count += it.count();
        }
        let estimate = |it: Item| {
            let y = &ritz[it.index()].y;
            beta * y[steps - 1].norm() / y.norm()
        };

        // lock in wanted order so a slow leading pair is never skipped
        let mut unconverged = Vec::new();
        let mut in_order = true;
        for &it in &wanted {
            let est = estimate(it);
            let (re, im) = combine(&vbasis[..steps], &ritz[it.index()].y);
            in_order &= est < cfg.tol;
            if in_order {
                let parts = match it {
                    Item::Real(_) => vec![re],
                    Item::Pair(_) => vec![re, im],
                };
                for p in parts {
                    if let Some(q) = orth_against(&locked, p) {
                        locked.push(q);
                        lock_estimates.push(est);
                    }
                }
            } else {
                unconverged.push((it, est, re, im));
            }
        }
        let worst = unconverged.iter().map(|u| u.1).fold(0.0, f64::max);
        residual_history.push(worst);

        if let Some(t) = budget.stopped.take() {
            termination = t;
            for (it, est, re, im) in unconverged {
                pending.push(re);
                lock_estimates.push(est);
                if let Item::Pair(_) = it {
                    pending.push(im);
                }
            }
            break;
        }
        if locked.len() >= k {
            break;
        }

        let mut restart = vec![0.0; n];
        if let Some((_, _, re, im)) = unconverged.first() {
            axpy(1.0, re, &mut restart);
            axpy(1.0, im, &mut restart);
        }
        v0 = match orth_against(&locked, restart) {
            Some(v) => v,
            None => fresh_vector(&mut rng, &locked, n).ok_or_else(|| Error::Breakdown {
                solver,
                reason: format!("invariant subspace with {} of {k} vectors", locked.len()),
            })?,
        };

        if let Some(c) = controller.as_mut() {
            if c.observe(worst)?.is_some() {
                msize_trajectory.push(c.msize());
            }
            msize = c.msize();
        }
        restarts.push(RestartEvent {
            iteration: budget.iterations,
            msize,
        });
    }
    let converged = locked.len() >= k;

    // Rayleigh-Ritz over everything gathered
    let mut w = locked;
    for p in pending {
        if let Some(q) = orth_against(&w, p) {
            w.push(q);
        }
    }
    let nw = w.len();
    let mut aw = vec![vec![0.0; n]; nw];
    for (v, a) in w.iter().zip(aw.iter_mut()) {
        op.apply(v, a);
    }
    let mut g = DMatrix::from_fn(nw, nw, |i, j| dot(&w[i], &aw[j]));
    let mut pairs = if symmetric {
        g = (&g + g.transpose()) * 0.5;
        symmetric_eig(&g)
    } else {
        dense_eig(&g)
    };
    sort_by_magnitude(&mut pairs);
    let scale = g.norm();
    let items = group(&mut pairs, scale);

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    'collect: for it in items {
        let r = &pairs[it.index()];
        let (re, im) = combine(&w, &r.y);
        match it {
            Item::Real(_) => {
                // fix the phase so the vector is real
                let (mut re, im) = (re, im);
                let pivot = (0..n)
                    .max_by(|&a, &b| (re[a].hypot(im[a])).total_cmp(&re[b].hypot(im[b])))
                    .unwrap_or(0);
                let phase = Complex64::new(re[pivot], im[pivot]);
                if phase.norm() > 0.0 {
                    let rot = phase.conj() / phase.norm();
                    for i in 0..n {
                        re[i] = (Complex64::new(re[i], im[i]) * rot).re;
                    }
                }
                let nr = norm2(&re);
                re.iter_mut().for_each(|v| *v /= nr);
                eigenvalues.push(Complex64::new(r.value.re, 0.0));
                eigenvectors.push(EigenVector::Real(re));
            }
            Item::Pair(_) => {
                let nr = (dot(&re, &re) + dot(&im, &im)).sqrt();
                let re: Vec<f64> = re.iter().map(|v| v / nr).collect();
                let im: Vec<f64> = im.iter().map(|v| v / nr).collect();
                let conj_im: Vec<f64> = im.iter().map(|v| -v).collect();
                eigenvalues.push(r.value);
                eigenvectors.push(EigenVector::Complex { re: re.clone(), im });
                if eigenvalues.len() >= k {
                    break 'collect;
                }
                eigenvalues.push(r.value.conj());
                eigenvectors.push(EigenVector::Complex { re, im: conj_im });
            }
        }
        if eigenvalues.len() >= k {
            break;
        }
    }

    let mut residuals = Vec::with_capacity(eigenvalues.len());
    for (lam, v) in eigenvalues.iter().zip(&eigenvectors) {
        residuals.push(true_residual_eigen_pair(op, *lam, v)?);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let recurrence_residual = lock_estimates.iter().copied().fold(0.0, f64::max);
    let workspace_bytes = if symmetric {
        workspace::lanczos_bytes(n, peak_m)
    } else {
        workspace::arnoldi_bytes(n, peak_m)
    };
    if !converged && termination == Termination::Converged {
        termination = Termination::MaxIterations;
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
        residuals,
        max_residual,
        recurrence_residual,
        converged,
        termination,
        iterations: budget.iterations,
        restarts,
        msize_trajectory,
        residual_history,
        fault_convergence: converged && max_residual > cfg.tol,
        elapsed: start.elapsed().as_secs_f64(),
        workspace_bytes,
    })
}
