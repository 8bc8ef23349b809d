use serde::Serialize;

use super::config::{Policy, PolicyConfig, SolverKind};
use crate::error::{Error, Result};
use crate::krylov::{workspace, OrthoVariant};

/// Restart frequency used by the STABLE policy.
pub const STABLE_RESTART: usize = 30;
/// Ceiling on `m` when no memory budget is given.
pub const UNBOUNDED_M_CAP: usize = 200;
/// Requirements at or below this use MGS instead of BCGS.
pub const MGS_THRESHOLD: f64 = 1e-10;

pub fn select_reorthogonalizer(residual_requirement: f64, fault_seen: bool) -> OrthoVariant {
    if fault_seen {
        OrthoVariant::Dgks
    } else if residual_requirement <= MGS_THRESHOLD {
        OrthoVariant::Mgs
    } else {
        OrthoVariant::bcgs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkspacePlan {
    pub restart_m_initial: usize,
    pub m_max: usize,
    pub workspace_bytes_cap: u64,
    /// Whether restart adaptation runs.
    pub restart_at: bool,
}

/// Solver workspace in bytes for restart frequency `m`.
pub fn solver_workspace(solver: SolverKind, n: usize, m: usize) -> u64 {
    match solver {
        SolverKind::Gmres | SolverKind::Arnoldi => workspace::arnoldi_bytes(n, m),
        SolverKind::Lanczos => workspace::lanczos_bytes(n, m),
        SolverKind::Bicgstab => workspace::bicgstab_bytes(n),
    }
}

/// Smallest usable restart frequency.
pub fn solver_floor(solver: SolverKind, n: usize, k: usize) -> usize {
    match solver {
        SolverKind::Gmres => 2.min(n),
        SolverKind::Bicgstab => 1,
        SolverKind::Lanczos | SolverKind::Arnoldi => (k + 2).min(n),
    }
}

/// `k` is the number of wanted eigenpairs (ignored for linear solvers).
pub fn plan_workspace(
    policy: &PolicyConfig,
    n: usize,
    matrix_bytes: u64,
    solver: SolverKind,
    k: usize,
) -> Result<WorkspacePlan> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let floor = solver_floor(solver, n, k).max(1);
    let m_max = match policy.maxmemory {
        None => n.min(UNBOUNDED_M_CAP).max(floor),
        Some(total) => {
            let needed = matrix_bytes + solver_workspace(solver, n, floor);
            if total < needed {
                return Err(Error::InfeasibleWorkspace { budget: total, needed });
            }
            let budget = total - matrix_bytes;
            if solver == SolverKind::Bicgstab {
                1
            } else {
                // workspace grows monotonically in m
                let (mut lo, mut hi) = (floor, n.max(floor));
                while lo < hi {
                    let mid = lo + (hi - lo + 1) / 2;
                    if solver_workspace(solver, n, mid) <= budget {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                lo
            }
        }
    };
    let m_max = if solver == SolverKind::Bicgstab { 1 } else { m_max };
    let (restart_m_initial, restart_at) = match policy.policy {
        Policy::Time | Policy::Accuracy => (m_max, true),
        Policy::Memory => (floor.min(m_max), true),
        Policy::Stable => (STABLE_RESTART.max(floor).min(m_max), false),
    };
    Ok(WorkspacePlan {
        restart_m_initial,
        m_max,
        workspace_bytes_cap: solver_workspace(solver, n, m_max),
        restart_at: restart_at && solver != SolverKind::Bicgstab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(policy: Policy, maxmemory: Option<u64>) -> PolicyConfig {
        PolicyConfig {
            policy,
            maxmemory,
            ..PolicyConfig::default()
        }
    }

    #[test]
    fn reorthogonalizer_rule() {
        assert_eq!(select_reorthogonalizer(1e-12, false), OrthoVariant::Mgs);
        assert_eq!(select_reorthogonalizer(1e-8, false), OrthoVariant::Bcgs { block_len: 4 });
        assert_eq!(select_reorthogonalizer(1e-8, true), OrthoVariant::Dgks);
        assert_eq!(select_reorthogonalizer(1e-12, true), OrthoVariant::Dgks);
    }

    #[test]
    fn memory_policy_starts_at_floor() {
        let p = plan_workspace(&with(Policy::Memory, Some(1 << 30)), 1000, 50_000, SolverKind::Gmres, 0).unwrap();
        assert_eq!(p.restart_m_initial, 2);
        assert!(p.restart_at);
        let e = plan_workspace(&with(Policy::Memory, None), 1000, 0, SolverKind::Lanczos, 4).unwrap();
        assert_eq!(e.restart_m_initial, 6);
    }

    #[test]
    fn time_policy_inverts_formula() {
        let n = 1000u64;
        let matrix_bytes = 77_777;
        for slack in [0u64, 500, 1000] {
            let budget = matrix_bytes + 8 * (n * 32 + 32 * 32 + slack);
            let p = plan_workspace(&with(Policy::Time, Some(budget)), 1000, matrix_bytes, SolverKind::Gmres, 0).unwrap();
            // brute force: largest m with 8(n(m+2)+(m+2)²) within the budget
            let brute = (1..=1000u64)
                .filter(|&m| 8 * (n * (m + 2) + (m + 2) * (m + 2)) <= budget - matrix_bytes)
                .max()
                .unwrap();
            assert_eq!(p.m_max as u64, brute);
            assert_eq!(p.m_max, 30);
            assert_eq!(p.restart_m_initial, 30);
        }
    }

    #[test]
    fn infeasible_budget() {
        let r = plan_workspace(&with(Policy::Time, Some(1000)), 1000, 500, SolverKind::Gmres, 0);
        assert!(matches!(r, Err(Error::InfeasibleWorkspace { .. })));
    }

    #[test]
    fn stable_and_unbounded() {
        let p = plan_workspace(&with(Policy::Stable, None), 5000, 0, SolverKind::Gmres, 0).unwrap();
        assert_eq!((p.restart_m_initial, p.m_max, p.restart_at), (30, 200, false));
        let small = plan_workspace(&with(Policy::Stable, None), 10, 0, SolverKind::Gmres, 0).unwrap();
        assert_eq!(small.restart_m_initial, 10);
        let b = plan_workspace(&with(Policy::Time, None), 100, 0, SolverKind::Bicgstab, 0).unwrap();
        assert_eq!(b.workspace_bytes_cap, 64 * 100);
        assert!(!b.restart_at);
    }

    #[test]
    fn memory_cap_not_above_time_cap() {
        for policy in [Policy::Memory, Policy::Time] {
            let p = plan_workspace(&with(policy, None), 300, 0, SolverKind::Gmres, 0).unwrap();
            assert!(p.restart_m_initial <= p.m_max);
        }
    }
}
