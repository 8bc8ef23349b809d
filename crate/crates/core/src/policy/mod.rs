//! Numerical-computation policies and the meta-solvers that honour them.

mod config;
mod meta;
mod plan;

pub use config::{
    group_policy_path, parse_group_policy, parse_policy_file, parse_policy_str, Policy, PolicyConfig,
    PreconditionerKind, SolverKind, DEFAULT_MAXTIME, DEFAULT_RESIDUAL, POLICY_FILE_PREFIX,
};
pub use meta::{
    eigensolve_meta, linear_solve_meta, KernelRequest, MetaOptions, MetaOutcome, MetaResult, PassRecord,
    MAX_ACCURACY_PASSES, TIGHTEN_FACTOR,
};
pub use plan::{
    plan_workspace, select_reorthogonalizer, solver_floor, solver_workspace, WorkspacePlan, MGS_THRESHOLD,
    STABLE_RESTART, UNBOUNDED_M_CAP,
};
