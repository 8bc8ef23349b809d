//! Policy-driven entry points: kernel selection, workspace planning, the
//! solver run and, under ACCURACY, the repair loop for fault convergence.

use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::{Policy, PolicyConfig, PreconditionerKind, SolverKind};
use super::plan::{plan_workspace, select_reorthogonalizer, WorkspacePlan};
use crate::autotune::{select_spmv_sym, select_spmv_unsym, RestartTuning, TuningOptions, TuningReport, WallClock};
use crate::error::{check_len, Error, Result};
use crate::krylov::{
    arnoldi_restarted, bicgstab, gmres_m, ilu0_factorize, lanczos_restarted, EigenResult, IluFactors, KrylovConfig,
    OrthoVariant, SolverResult,
};
use crate::sparse::{CsrMatrix, LoadedMatrix, SymCsrMatrix};
use crate::spmv::{KernelChoice, MatrixRef, SpmvOperator, SymKernel, SymVariant, UnsymKernel, UnsymVariant, WorkerPool};

pub const MAX_ACCURACY_PASSES: usize = 8;
pub const TIGHTEN_FACTOR: f64 = 0.1;

/// Kernel override; `Auto` runs the empirical selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRequest {
    #[default]
    Auto,
    Unsym(UnsymVariant),
    Sym(SymVariant),
}

impl FromStr for KernelRequest {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "auto" => KernelRequest::Auto,
            "u1" => KernelRequest::Unsym(UnsymVariant::U1),
            "u2" => KernelRequest::Unsym(UnsymVariant::U2),
            "u3" => KernelRequest::Unsym(UnsymVariant::U3),
            "u4" => KernelRequest::Unsym(UnsymVariant::U4),
            "s1" => KernelRequest::Sym(SymVariant::S1),
            "s2" => KernelRequest::Sym(SymVariant::S2),
            "s3" => KernelRequest::Sym(SymVariant::S3),
            other => return Err(format!("unknown kernel {other:?}; expected auto, u1-u4 or s1-s3")),
        })
    }
}

impl std::fmt::Display for KernelRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelRequest::Auto => "auto",
            KernelRequest::Unsym(v) => v.name(),
            KernelRequest::Sym(v) => v.name(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MetaOptions {
    pub kernel: KernelRequest,
    /// Lane count for BSS kernels; restricts the tuning sweep when set.
    pub jl: Option<usize>,
    pub tuning: TuningOptions,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for MetaOptions {
    fn default() -> Self {
        Self {
            kernel: KernelRequest::Auto,
            jl: None,
            tuning: TuningOptions::default(),
            seed: KrylovConfig::default().seed,
            max_iters: KrylovConfig::default().max_iters,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum MetaResult {
    Linear(SolverResult),
    Eigen(EigenResult),
}

impl MetaResult {
    pub fn converged(&self) -> bool {
        match self {
            MetaResult::Linear(r) => r.converged,
            MetaResult::Eigen(r) => r.converged,
        }
    }

    pub fn fault_convergence(&self) -> bool {
        match self {
            MetaResult::Linear(r) => r.fault_convergence,
            MetaResult::Eigen(r) => r.fault_convergence,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            MetaResult::Linear(r) => r.iterations,
            MetaResult::Eigen(r) => r.iterations,
        }
    }

    pub fn workspace_bytes(&self) -> u64 {
        match self {
            MetaResult::Linear(r) => r.workspace_bytes,
            MetaResult::Eigen(r) => r.workspace_bytes,
        }
    }

    /// Linear: recomputed relative residual. Eigen: largest `‖Av − λv‖`.
    pub fn true_residual(&self) -> f64 {
        match self {
            MetaResult::Linear(r) => r.true_residual,
            MetaResult::Eigen(r) => r.max_residual,
        }
    }

    pub fn recurrence_residual(&self) -> f64 {
        match self {
            MetaResult::Linear(r) => r.recurrence_residual,
            MetaResult::Eigen(r) => r.recurrence_residual,
        }
    }

    pub fn residual_history(&self) -> &[f64] {
        match self {
            MetaResult::Linear(r) => &r.residual_history,
            MetaResult::Eigen(r) => &r.residual_history,
        }
    }

    pub fn restarts(&self) -> usize {
        match self {
            MetaResult::Linear(r) => r.restarts.len(),
            MetaResult::Eigen(r) => r.restarts.len(),
        }
    }

    pub fn as_linear(&self) -> Option<&SolverResult> {
        match self {
            MetaResult::Linear(r) => Some(r),
            MetaResult::Eigen(_) => None,
        }
    }

    pub fn as_eigen(&self) -> Option<&EigenResult> {
        match self {
            MetaResult::Eigen(r) => Some(r),
            MetaResult::Linear(_) => None,
        }
    }
}

/// One run of the underlying solver.
#[derive(Debug, Clone, Serialize)]
pub struct PassRecord {
    pub ortho: OrthoVariant,
    pub tol: f64,
    pub converged: bool,
    pub fault_convergence: bool,
    pub true_residual: f64,
    pub iterations: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaOutcome {
    /// Result of the final pass.
    pub result: MetaResult,
    pub solver: SolverKind,
    pub policy: Policy,
    pub policy_satisfied: bool,
    pub outer_passes: usize,
    pub passes: Vec<PassRecord>,
    pub tuning: TuningReport,
    pub kernel: &'static str,
    pub jl: Option<usize>,
    pub workers: usize,
    pub ortho_used: OrthoVariant,
    pub preconditioner: PreconditionerKind,
    pub plan: WorkspacePlan,
    /// Restart frequencies over all passes.
    pub msize_trajectory: Vec<usize>,
    pub total_iterations: usize,
    pub spmv_calls: u64,
    pub spmv_seconds: f64,
    pub spmv_gflops: f64,
    pub elapsed: f64,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn tuning_options(opts: &MetaOptions) -> TuningOptions {
    let mut t = opts.tuning.clone();
    if let Some(jl) = opts.jl {
        t.jl_candidates = vec![jl];
    }
    t
}

fn setup_unsym(
    a: &CsrMatrix,
    policy: &PolicyConfig,
    opts: &MetaOptions,
    workers: usize,
) -> Result<(KernelChoice, WorkerPool, TuningReport)> {
    let mut pool = WorkerPool::new(workers)?;
    match opts.kernel {
        KernelRequest::Sym(v) => Err(Error::InvalidArgument(format!(
            "kernel {} needs a symmetric matrix",
            v.name()
        ))),
        KernelRequest::Unsym(v) => {
            let k = KernelChoice::Unsym(UnsymKernel::build(a, v, workers, opts.jl)?);
            let report = TuningReport::untimed(&k, workers, true);
            Ok((k, pool, report))
        }
        KernelRequest::Auto if policy.policy == Policy::Stable => {
            let k = KernelChoice::Unsym(UnsymKernel::build(a, UnsymVariant::U1, workers, None)?);
            let report = TuningReport::untimed(&k, workers, false);
            Ok((k, pool, report))
        }
        KernelRequest::Auto => {
            let sel = select_spmv_unsym(a, &mut pool, &tuning_options(opts), &mut WallClock)?;
            if sel.workers != pool.size() {
                pool = WorkerPool::new(sel.workers)?;
            }
            Ok((sel.kernel, pool, sel.report))
        }
    }
}

fn setup_sym(
    s: &SymCsrMatrix,
    policy: &PolicyConfig,
    opts: &MetaOptions,
    workers: usize,
) -> Result<(KernelChoice, WorkerPool, TuningReport)> {
    let mut pool = WorkerPool::new(workers)?;
    match opts.kernel {
        KernelRequest::Unsym(_) => unreachable!("caller routes unsymmetric kernels to full storage"),
        KernelRequest::Sym(v) => {
            let k = KernelChoice::Sym(SymKernel::build(s, v, workers)?);
            let report = TuningReport::untimed(&k, workers, true);
            Ok((k, pool, report))
        }
        KernelRequest::Auto if policy.policy == Policy::Stable => {
            let k = KernelChoice::Sym(SymKernel::build(s, SymVariant::S1, workers)?);
            let report = TuningReport::untimed(&k, workers, false);
            Ok((k, pool, report))
        }
        KernelRequest::Auto => {
            let sel = select_spmv_sym(s, &mut pool, &tuning_options(opts), &mut WallClock)?;
            if sel.workers != pool.size() {
                pool = WorkerPool::new(sel.workers)?;
            }
            Ok((sel.kernel, pool, sel.report))
        }
    }
}

fn first_ortho(policy: &PolicyConfig) -> OrthoVariant {
    if policy.policy == Policy::Stable {
        OrthoVariant::Mgs
    } else {
        select_reorthogonalizer(policy.residual, false)
    }
}

struct LoopOutput {
    result: MetaResult,
    passes: Vec<PassRecord>,
    trajectory: Vec<usize>,
    total_iterations: usize,
    ortho: OrthoVariant,
}

/// Runs passes until the policy is met; only ACCURACY repeats.
fn outer_loop(
    policy: &PolicyConfig,
    start: Instant,
    mut run: impl FnMut(OrthoVariant, f64, Duration, Option<&MetaResult>) -> Result<MetaResult>,
    satisfied: impl Fn(&MetaResult) -> bool,
) -> Result<LoopOutput> {
    let mut ortho = first_ortho(policy);
    let mut tol = policy.residual;
    let mut passes = Vec::new();
    let mut trajectory = Vec::new();
    let mut total_iterations = 0;
    let mut last: Option<MetaResult> = None;
    loop {
        let remaining = (policy.maxtime - start.elapsed().as_secs_f64()).max(0.0);
        let t0 = Instant::now();
        let res = run(ortho, tol, Duration::from_secs_f64(remaining), last.as_ref())?;
        total_iterations += res.iterations();
        match &res {
            MetaResult::Linear(r) => trajectory.extend_from_slice(&r.msize_trajectory),
            MetaResult::Eigen(r) => trajectory.extend_from_slice(&r.msize_trajectory),
        }
        passes.push(PassRecord {
            ortho,
            tol,
            converged: res.converged(),
            fault_convergence: res.fault_convergence(),
            true_residual: res.true_residual(),
            iterations: res.iterations(),
            elapsed: t0.elapsed().as_secs_f64(),
        });
        let done = policy.policy != Policy::Accuracy
            || satisfied(&res)
            || !res.converged()
            || passes.len() >= MAX_ACCURACY_PASSES
            || start.elapsed().as_secs_f64() >= policy.maxtime;
        last = Some(res);
        if done {
            break;
        }
        log::info!("accuracy pass {} missed the requirement; retrying with DGKS", passes.len());
        ortho = select_reorthogonalizer(policy.residual, true);
        tol *= TIGHTEN_FACTOR;
    }
    Ok(LoopOutput {
        result: last.expect("at least one pass"),
        passes,
        trajectory,
        total_iterations,
        ortho,
    })
}

pub fn linear_solve_meta(a: &CsrMatrix, b: &[f64], policy: &PolicyConfig, opts: &MetaOptions) -> Result<MetaOutcome> {
    let start = Instant::now();
    let n = a.n();
    check_len(n, b.len())?;
    let solver = policy.solver.unwrap_or(SolverKind::Gmres);
    if solver.is_eigen() {
        return Err(Error::InvalidArgument(format!("{} is an eigensolver", solver.name())));
    }
    let (kernel, pool, tuning) = setup_unsym(a, policy, opts, policy.cpu.unwrap_or_else(default_workers))?;
    let workers = pool.size();
    let (ilu, preconditioner): (Option<IluFactors>, _) = match policy.preconditioner.unwrap_or(PreconditionerKind::Ilu0) {
        PreconditionerKind::Ilu0 => match ilu0_factorize(a) {
            Ok(f) => (Some(f), PreconditionerKind::Ilu0),
            Err(Error::ZeroPivot { row }) => {
                log::warn!("ILU(0) hit a zero pivot at row {row}; running unpreconditioned");
                (None, PreconditionerKind::None)
            }
            Err(e) => return Err(e),
        },
        PreconditionerKind::None => (None, PreconditionerKind::None),
    };
    let matrix_bytes = a.storage_bytes() + ilu.as_ref().map_or(0, IluFactors::storage_bytes);
    let plan = plan_workspace(policy, n, matrix_bytes, solver, 0)?;
    let (kernel_name, jl) = (kernel.name(), kernel.jl());
    let mut op = SpmvOperator::new(MatrixRef::General(a), kernel, pool)?;

    let out = outer_loop(
        policy,
        start,
        |ortho, tol, max_time, prev| {
            let cfg = KrylovConfig {
                restart_m: plan.restart_m_initial,
                m_max: plan.m_max,
                tol,
                max_iters: opts.max_iters,
                max_time,
                ortho,
                restart_tuning: plan.restart_at.then(RestartTuning::default),
                initial_guess: prev.and_then(MetaResult::as_linear).map(|r| r.x.clone()),
                seed: opts.seed,
            };
            let r = match solver {
                SolverKind::Gmres => gmres_m(&mut op, ilu.as_ref(), b, &cfg)?,
                _ => bicgstab(&mut op, ilu.as_ref(), b, &cfg)?,
            };
            Ok(MetaResult::Linear(r))
        },
        |r| r.true_residual() <= policy.residual,
    )?;
    let policy_satisfied = out.result.true_residual() <= policy.residual;
    Ok(MetaOutcome {
        policy_satisfied,
        outer_passes: out.passes.len(),
        result: out.result,
        solver,
        policy: policy.policy,
        passes: out.passes,
        tuning,
        kernel: kernel_name,
        jl,
        workers,
        ortho_used: out.ortho,
        preconditioner,
        plan,
        msize_trajectory: out.trajectory,
        total_iterations: out.total_iterations,
        spmv_calls: op.calls(),
        spmv_seconds: op.kernel_time().as_secs_f64(),
        spmv_gflops: op.gflops(),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

pub fn eigensolve_meta(matrix: &LoadedMatrix, k: usize, policy: &PolicyConfig, opts: &MetaOptions) -> Result<MetaOutcome> {
    let start = Instant::now();
    let n = matrix.n();
    let sym_storage: Option<SymCsrMatrix> = match matrix {
        LoadedMatrix::Symmetric(s) => Some(s.clone()),
        LoadedMatrix::General(a) if a.is_symmetric() => Some(a.upper_triangle()),
        LoadedMatrix::General(_) => None,
    };
    let symmetric = sym_storage.is_some();
    let solver = policy
        .solver
        .unwrap_or(if symmetric { SolverKind::Lanczos } else { SolverKind::Arnoldi });
    match solver {
        SolverKind::Lanczos if !symmetric => {
            return Err(Error::InvalidArgument("lanczos needs a symmetric matrix".into()))
        }
        SolverKind::Gmres | SolverKind::Bicgstab => {
            return Err(Error::InvalidArgument(format!("{} is a linear solver", solver.name())))
        }
        _ => {}
    }
    if let Some(PreconditionerKind::Ilu0) = policy.preconditioner {
        log::warn!("preconditioning is not used by the eigensolvers; ignoring ILU0");
    }
    let workers = policy.cpu.unwrap_or_else(default_workers);
    let use_sym_kernels = symmetric && !matches!(opts.kernel, KernelRequest::Unsym(_));
    let full_storage: Option<CsrMatrix> = (!use_sym_kernels).then(|| matrix.to_full());

    let (mref, (kernel, pool, tuning)) = match (&sym_storage, &full_storage) {
        (Some(s), None) => (MatrixRef::Symmetric(s), setup_sym(s, policy, opts, workers)?),
        (_, Some(a)) => (MatrixRef::General(a), setup_unsym(a, policy, opts, workers)?),
        (None, None) => unreachable!(),
    };
    let matrix_bytes = match mref {
        MatrixRef::Symmetric(s) => s.storage_bytes(),
        MatrixRef::General(a) => a.storage_bytes(),
    };
    let plan = plan_workspace(policy, n, matrix_bytes, solver, k)?;
    let workers = pool.size();
    let (kernel_name, jl) = (kernel.name(), kernel.jl());
    let mut op = SpmvOperator::new(mref, kernel, pool)?;

    let out = outer_loop(
        policy,
        start,
        |ortho, tol, max_time, _| {
            let cfg = KrylovConfig {
                restart_m: plan.restart_m_initial,
                m_max: plan.m_max,
                tol,
                max_iters: opts.max_iters,
                max_time,
                ortho,
                restart_tuning: plan.restart_at.then(RestartTuning::default),
                initial_guess: None,
                seed: opts.seed,
            };
            let r = match solver {
                SolverKind::Lanczos => lanczos_restarted(&mut op, k, &cfg)?,
                _ => arnoldi_restarted(&mut op, k, &cfg)?,
            };
            Ok(MetaResult::Eigen(r))
        },
        |r| eigen_satisfied(r, k, policy.residual),
    )?;
    let policy_satisfied = eigen_satisfied(&out.result, k, policy.residual);
    Ok(MetaOutcome {
        policy_satisfied,
        outer_passes: out.passes.len(),
        result: out.result,
        solver,
        policy: policy.policy,
        passes: out.passes,
        tuning,
        kernel: kernel_name,
        jl,
        workers,
        ortho_used: out.ortho,
        preconditioner: PreconditionerKind::None,
        plan,
        msize_trajectory: out.trajectory,
        total_iterations: out.total_iterations,
        spmv_calls: op.calls(),
        spmv_seconds: op.kernel_time().as_secs_f64(),
        spmv_gflops: op.gflops(),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

fn eigen_satisfied(r: &MetaResult, k: usize, requirement: f64) -> bool {
    match r {
        MetaResult::Eigen(e) => e.eigenvalues.len() == k && e.max_residual <= requirement,
        MetaResult::Linear(_) => false,
    }
}
