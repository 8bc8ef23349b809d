use std::io::Write;

use atsolve::autotune::TuningReport;
use atsolve::krylov::{OrthoVariant, RestartEvent, Termination};
use atsolve::policy::{MetaOutcome, MetaResult, PassRecord, PolicyConfig, PreconditionerKind, WorkspacePlan};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub matrix: MatrixInfo,
    pub config: ConfigEcho,
    pub tuning: TuningReport,
    pub solver: SolverSection,
    pub accuracy: AccuracySection,
    pub resources: ResourceSection,
    pub spmv_gflops: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenSection>,
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
pub struct MatrixInfo {
    pub name: String,
    pub path: String,
    pub n: usize,
    /// Stored entries (upper triangle only for symmetric storage).
    pub nnz: usize,
    pub symmetric: bool,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub mode: &'static str,
    pub policy: PolicyConfig,
    pub kernel_request: String,
    pub jl: Option<usize>,
    pub k: Option<usize>,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SolverSection {
    pub name: &'static str,
    pub kernel: &'static str,
    pub jl: Option<usize>,
    pub ortho_used: OrthoVariant,
    pub preconditioner: PreconditionerKind,
    pub termination: Termination,
    /// Inner iterations of the final pass.
    pub iterations: usize,
    /// Inner iterations summed over all passes.
    pub total_iterations: usize,
    pub restarts: Vec<RestartEvent>,
    pub msize_trajectory: Vec<usize>,
    pub residual_history: Vec<f64>,
    pub outer_passes: usize,
    pub passes: Vec<PassRecord>,
    pub plan: WorkspacePlan,
}

#[derive(Debug, Serialize)]
pub struct AccuracySection {
    pub converged: bool,
    pub recurrence_residual: f64,
    pub true_residual: f64,
    pub fault_convergence: bool,
    pub policy_satisfied: bool,
}

#[derive(Debug, Serialize)]
pub struct ResourceSection {
    pub elapsed: f64,
    pub workspace_bytes: u64,
    pub workers: usize,
    pub spmv_calls: u64,
    pub spmv_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct EigenSection {
    /// `[re, im]` per eigenvalue.
    pub eigenvalues: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
}

pub fn exit_code(outcome: &MetaOutcome) -> i32 {
    let r = &outcome.result;
    if r.converged() && outcome.policy_satisfied {
        0
    } else if r.converged() {
        // converged by the recurrence but the recomputed residual misses the requirement
        3
    } else {
        2
    }
}

impl BenchReport {
    pub fn new(matrix: MatrixInfo, config: ConfigEcho, outcome: MetaOutcome) -> Self {
        let exit_code = exit_code(&outcome);
        let r = &outcome.result;
        let (termination, restarts) = match r {
            MetaResult::Linear(s) => (s.termination.clone(), s.restarts.clone()),
            MetaResult::Eigen(e) => (e.termination.clone(), e.restarts.clone()),
        };
        let eigen = r.as_eigen().map(|e| EigenSection {
            eigenvalues: e.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            residuals: e.residuals.clone(),
        });
        BenchReport {
            schema_version: SCHEMA_VERSION,
            matrix,
            config,
            solver: SolverSection {
                name: outcome.solver.name(),
                kernel: outcome.kernel,
                jl: outcome.jl,
                ortho_used: outcome.ortho_used,
                preconditioner: outcome.preconditioner,
                termination,
                iterations: r.iterations(),
                total_iterations: outcome.total_iterations,
                restarts,
                msize_trajectory: outcome.msize_trajectory.clone(),
                residual_history: r.residual_history().to_vec(),
                outer_passes: outcome.outer_passes,
                passes: outcome.passes.clone(),
                plan: outcome.plan,
            },
            accuracy: AccuracySection {
                converged: r.converged(),
                recurrence_residual: r.recurrence_residual(),
                true_residual: r.true_residual(),
                fault_convergence: r.fault_convergence(),
                policy_satisfied: outcome.policy_satisfied,
            },
            resources: ResourceSection {
                elapsed: outcome.elapsed,
                workspace_bytes: r.workspace_bytes(),
                workers: outcome.workers,
                spmv_calls: outcome.spmv_calls,
                spmv_seconds: outcome.spmv_seconds,
            },
            spmv_gflops: outcome.spmv_gflops,
            eigen,
            exit_code,
            tuning: outcome.tuning,
        }
    }

    pub fn write_json(&self, mut w: impl Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    /// One row per timed candidate, then one summary row.
    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.tuning.candidates {
            let selected = self.tuning.selected == Some(c.kernel)
                && self.tuning.selected_jl == c.jl
                && self.tuning.selected_workers == Some(c.workers);
            out.serialize(CsvRow {
                row_type: "candidate",
                matrix: &self.matrix.name,
                n: self.matrix.n,
                nnz: self.matrix.nnz,
                kernel: c.kernel,
                jl: c.jl,
                workers: c.workers,
                executions: Some(c.executions),
                best_time: c.best_time,
                trial_times: c.trial_times.iter().map(|t| format!("{t:e}")).collect::<Vec<_>>().join(";"),
                disqualified: Some(c.disqualified),
                selected: Some(selected),
                ..CsvRow::default()
            })?;
        }
        out.serialize(CsvRow {
            row_type: "summary",
            matrix: &self.matrix.name,
            n: self.matrix.n,
            nnz: self.matrix.nnz,
            kernel: self.solver.kernel,
            jl: self.solver.jl,
            workers: self.resources.workers,
            solver: self.solver.name,
            policy: Some(self.config.policy.policy.to_string()),
            iterations: Some(self.solver.total_iterations),
            outer_passes: Some(self.solver.outer_passes),
            converged: Some(self.accuracy.converged),
            true_residual: Some(self.accuracy.true_residual),
            recurrence_residual: Some(self.accuracy.recurrence_residual),
            fault_convergence: Some(self.accuracy.fault_convergence),
            policy_satisfied: Some(self.accuracy.policy_satisfied),
            elapsed: Some(self.resources.elapsed),
            workspace_bytes: Some(self.resources.workspace_bytes),
            spmv_gflops: Some(self.spmv_gflops),
            ..CsvRow::default()
        })?;
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Default, Serialize)]
struct CsvRow<'a> {
    row_type: &'a str,
    matrix: &'a str,
    n: usize,
    nnz: usize,
    kernel: &'a str,
    jl: Option<usize>,
    workers: usize,
    executions: Option<usize>,
    best_time: Option<f64>,
    trial_times: String,
    disqualified: Option<bool>,
    selected: Option<bool>,
    solver: &'a str,
    policy: Option<String>,
    iterations: Option<usize>,
    outer_passes: Option<usize>,
    converged: Option<bool>,
    true_residual: Option<f64>,
    recurrence_residual: Option<f64>,
    fault_convergence: Option<bool>,
    policy_satisfied: Option<bool>,
    elapsed: Option<f64>,
    workspace_bytes: Option<u64>,
    spmv_gflops: Option<f64>,
}
