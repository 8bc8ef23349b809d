//! Empirical SpMV kernel selection before the iteration starts.
//!
//! Every candidate runs once against the sequential reference (that run
//! doubles as warm-up), then `timed_trials` more times under the timer. The
//! candidate with the smallest best trial wins; ties go to the lower variant
//! ordinal, then the lower `jl`, then fewer workers.

use std::time::Instant;

use log::{debug, warn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{
    build_bss_plan, build_reduction_regions, build_row_partition, expand_symmetric, CsrMatrix, PartitionScheme,
    SymCsrMatrix,
};
use crate::spmv::{
    spmv_ref, spmv_sym_into, spmv_unsym_into, KernelChoice, SymKernel, SymVariant, UnsymKernel, UnsymPlan,
    UnsymVariant, WorkerPool,
};

pub const DEFAULT_JL_CANDIDATES: [usize; 6] = [8, 16, 32, 64, 128, 256];
/// Upper bound on kernel executions per candidate: one checked warm-up plus timed trials.
pub const MAX_EXECUTIONS_PER_CANDIDATE: usize = 4;

#[derive(Debug, Clone)]
pub struct TuningOptions {
    pub jl_candidates: Vec<usize>,
    pub timed_trials: usize,
    /// Also sweep worker counts 1, 2, 4, … up to the pool size.
    pub thread_sweep: bool,
}

impl Default for TuningOptions {
    fn default() -> Self {
        Self {
            jl_candidates: DEFAULT_JL_CANDIDATES.to_vec(),
            timed_trials: MAX_EXECUTIONS_PER_CANDIDATE - 1,
            thread_sweep: false,
        }
    }
}

/// Identifies one candidate kernel configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CandidateId {
    pub kernel: KernelTag,
    pub jl: Option<usize>,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum KernelTag {
    Unsym(UnsymVariant),
    Sym(SymVariant),
}

impl KernelTag {
    pub fn name(self) -> &'static str {
        match self {
            KernelTag::Unsym(v) => v.name(),
            KernelTag::Sym(v) => v.name(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateTiming {
    pub kernel: &'static str,
    pub jl: Option<usize>,
    pub workers: usize,
    pub executions: usize,
    pub trial_times: Vec<f64>,
    pub best_time: Option<f64>,
    pub disqualified: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TuningReport {
    pub candidates: Vec<CandidateTiming>,
    pub selected: Option<&'static str>,
    pub selected_jl: Option<usize>,
    pub selected_workers: Option<usize>,
    pub trials_per_candidate: usize,
    /// Kernel fixed by the caller; nothing was measured.
    pub forced: bool,
}

impl TuningReport {
    /// Report for a kernel chosen without measurement.
    pub fn untimed(kernel: &KernelChoice, workers: usize, forced: bool) -> Self {
        Self {
            candidates: Vec::new(),
            selected: Some(kernel.name()),
            selected_jl: kernel.jl(),
            selected_workers: Some(workers),
            trials_per_candidate: 0,
            forced,
        }
    }

    pub fn total_executions(&self) -> usize {
        self.candidates.iter().map(|c| c.executions).sum()
    }

    pub fn max_executions_per_candidate(&self) -> usize {
        self.candidates.iter().map(|c| c.executions).max().unwrap_or(0)
    }
}

/// Measures one run of a candidate in seconds. Implementations must invoke `run` exactly once.
pub trait TrialTimer {
    fn time(&mut self, candidate: &CandidateId, run: &mut dyn FnMut()) -> f64;
}

/// Wall-clock timer.
#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl TrialTimer for WallClock {
    fn time(&mut self, _candidate: &CandidateId, run: &mut dyn FnMut()) -> f64 {
        let t0 = Instant::now();
        run();
        t0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub kernel: KernelChoice,
    pub workers: usize,
    pub report: TuningReport,
}

fn probe_vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0).collect()
}

/// Componentwise bound `|A|·|x|`, used to scale the cross-check tolerance.
fn abs_product(matrix: &CsrMatrix, x: &[f64]) -> f64 {
    (0..matrix.n())
        .map(|i| matrix.row(i).map(|(j, v)| (v * x[j]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn matches_reference(y: &[f64], reference: &[f64], scale: f64, n: usize) -> bool {
    let tol = 1e-13 * n as f64 * scale.max(f64::MIN_POSITIVE);
    y.iter().zip(reference).all(|(a, b)| (a - b).abs() <= tol)
}

fn worker_counts(pool_size: usize, sweep: bool) -> Vec<usize> {
    if !sweep {
        return vec![pool_size];
    }
    let mut counts = Vec::new();
    let mut p = 1;
    while p < pool_size {
        counts.push(p);
        p *= 2;
    }
    counts.push(pool_size);
    counts
}

struct Trial {
    id: CandidateId,
    kernel: KernelChoice,
}

fn run_candidates(
    trials: Vec<Trial>,
    n: usize,
    reference: &[f64],
    scale: f64,
    options: &TuningOptions,
    pool: &mut WorkerPool,
    timer: &mut dyn TrialTimer,
    mut exec: impl FnMut(&KernelChoice, &[f64], &mut [f64], &mut WorkerPool) -> Result<()>,
) -> Result<Selection> {
    let x = probe_vector(n);
    let mut y = vec![0.0; n];
    let timed = options.timed_trials.min(MAX_EXECUTIONS_PER_CANDIDATE - 1);
    let mut report = TuningReport {
        trials_per_candidate: timed,
        ..TuningReport::default()
    };
    let mut best: Option<(f64, CandidateId, KernelChoice)> = None;

    for trial in trials {
        let mut timing = CandidateTiming {
            kernel: trial.id.kernel.name(),
            jl: trial.id.jl,
            workers: trial.id.workers,
            executions: 0,
            trial_times: Vec::with_capacity(timed),
            best_time: None,
            disqualified: false,
        };
        // checked warm-up
        timing.executions += 1;
        let ok = exec(&trial.kernel, &x, &mut y, pool).is_ok() && matches_reference(&y, reference, scale, n);
        if !ok {
            warn!("candidate {:?} disagrees with the reference kernel; disqualified", trial.id);
            timing.disqualified = true;
            report.candidates.push(timing);
            continue;
        }
        for _ in 0..timed {
            let mut failed = false;
            let t = timer.time(&trial.id, &mut || {
                failed |= exec(&trial.kernel, &x, &mut y, pool).is_err();
            });
            timing.executions += 1;
            if failed {
                timing.disqualified = true;
                break;
            }
            timing.trial_times.push(t);
        }
        if !timing.disqualified {
            let bt = timing.trial_times.iter().copied().fold(f64::INFINITY, f64::min);
            timing.best_time = bt.is_finite().then_some(bt).or(Some(0.0));
            let bt = timing.best_time.unwrap_or(0.0);
            let better = match &best {
                None => true,
                Some((b, id, _)) => bt < *b || (bt == *b && trial.id < *id),
            };
            if better {
                best = Some((bt, trial.id, trial.kernel));
            }
        }
        debug!("candidate {:?}: {:?}", trial.id, timing.trial_times);
        report.candidates.push(timing);
    }

    let (_, id, kernel) = best.ok_or(Error::AllCandidatesDisqualified)?;
    report.selected = Some(id.kernel.name());
    report.selected_jl = id.jl;
    report.selected_workers = Some(id.workers);
    Ok(Selection {
        kernel,
        workers: id.workers,
        report,
    })
}

pub fn select_spmv_unsym(
    matrix: &CsrMatrix,
    pool: &mut WorkerPool,
    options: &TuningOptions,
    timer: &mut dyn TrialTimer,
) -> Result<Selection> {
    if matrix.n() == 0 || matrix.nnz() == 0 {
        return Err(Error::InvalidArgument("cannot tune SpMV for an empty matrix".into()));
    }
    let mut trials = Vec::new();
    for workers in worker_counts(pool.size(), options.thread_sweep) {
        for (variant, scheme) in [
            (UnsymVariant::U1, PartitionScheme::RowBased),
            (UnsymVariant::U2, PartitionScheme::NnzBalanced),
        ] {
            trials.push(Trial {
                id: CandidateId {
                    kernel: KernelTag::Unsym(variant),
                    jl: None,
                    workers,
                },
                kernel: KernelChoice::Unsym(UnsymKernel {
                    variant,
                    plan: UnsymPlan::Rows(build_row_partition(matrix.row_ptr(), workers, scheme)?),
                }),
            });
        }
        let mut jls = options.jl_candidates.clone();
        jls.sort_unstable();
        jls.dedup();
        for jl in jls {
            if jl == 0 || matrix.nnz() < 4 * jl {
                continue;
            }
            trials.push(Trial {
                id: CandidateId {
                    kernel: KernelTag::Unsym(UnsymVariant::U3),
                    jl: Some(jl),
                    workers,
                },
                kernel: KernelChoice::Unsym(UnsymKernel {
                    variant: UnsymVariant::U3,
                    plan: UnsymPlan::Bss(build_bss_plan(matrix, jl)?),
                }),
            });
        }
    }
    let x = probe_vector(matrix.n());
    let reference = spmv_ref(matrix, &x)?;
    let scale = abs_product(matrix, &x);
    run_candidates(trials, matrix.n(), &reference, scale, options, pool, timer, |k, x, y, pool| {
        let KernelChoice::Unsym(k) = k else {
            unreachable!("unsymmetric candidates only")
        };
        spmv_unsym_into(k.variant, matrix, &k.plan, x, y, pool)
    })
}

pub fn select_spmv_sym(
    matrix: &SymCsrMatrix,
    pool: &mut WorkerPool,
    options: &TuningOptions,
    timer: &mut dyn TrialTimer,
) -> Result<Selection> {
    if matrix.n() == 0 || matrix.nnz() == 0 {
        return Err(Error::InvalidArgument("cannot tune SpMV for an empty matrix".into()));
    }
    let mut trials = Vec::new();
    for workers in worker_counts(pool.size(), options.thread_sweep) {
        let rows = build_row_partition(matrix.row_ptr(), workers, PartitionScheme::RowBased)?;
        let balanced = build_row_partition(matrix.row_ptr(), workers, PartitionScheme::NnzBalanced)?;
        let regions = build_reduction_regions(matrix, &balanced)?;
        let kernels = [
            SymKernel {
                variant: SymVariant::S1,
                partition: rows,
                regions: None,
            },
            SymKernel {
                variant: SymVariant::S2,
                partition: balanced.clone(),
                regions: None,
            },
            SymKernel {
                variant: SymVariant::S3,
                partition: balanced,
                regions: Some(regions),
            },
        ];
        for k in kernels {
            trials.push(Trial {
                id: CandidateId {
                    kernel: KernelTag::Sym(k.variant),
                    jl: None,
                    workers,
                },
                kernel: KernelChoice::Sym(k),
            });
        }
    }
    let full = expand_symmetric(matrix);
    let x = probe_vector(matrix.n());
    let reference = spmv_ref(&full, &x)?;
    let scale = abs_product(&full, &x);
    run_candidates(trials, matrix.n(), &reference, scale, options, pool, timer, |k, x, y, pool| {
        let KernelChoice::Sym(k) = k else {
            unreachable!("symmetric candidates only")
        };
        spmv_sym_into(k.variant, matrix, &k.partition, k.regions.as_ref(), x, y, pool)
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    /// Returns preset times per kernel name (and jl), still running the kernel.
    struct StubTimer {
        times: HashMap<(&'static str, Option<usize>), f64>,
        default: f64,
    }

    impl TrialTimer for StubTimer {
        fn time(&mut self, c: &CandidateId, run: &mut dyn FnMut()) -> f64 {
            run();
            *self.times.get(&(c.kernel.name(), c.jl)).unwrap_or(&self.default)
        }
    }

    fn stub(entries: &[(&'static str, Option<usize>, f64)]) -> StubTimer {
        StubTimer {
            times: entries.iter().map(|&(k, jl, t)| ((k, jl), t)).collect(),
            default: 1.0,
        }
    }

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn stubbed_u2_fastest() {
        let a = tridiag(400);
        let mut pool = WorkerPool::new(2).unwrap();
        let mut timer = stub(&[("u2", None, 0.1)]);
        let sel = select_spmv_unsym(&a, &mut pool, &TuningOptions::default(), &mut timer).unwrap();
        assert_eq!(sel.report.selected, Some("u2"));
        assert!(matches!(sel.kernel, KernelChoice::Unsym(UnsymKernel { variant: UnsymVariant::U2, .. })));
    }

    #[test]
    fn tie_goes_to_lowest_ordinal() {
        let a = tridiag(400);
        let mut pool = WorkerPool::new(2).unwrap();
        let mut timer = stub(&[("u1", None, 0.1), ("u2", None, 0.1)]);
        let sel = select_spmv_unsym(&a, &mut pool, &TuningOptions::default(), &mut timer).unwrap();
        assert_eq!(sel.report.selected, Some("u1"));

        let mut timer = stub(&[("u3", Some(16), 0.1), ("u3", Some(8), 0.1)]);
        let sel = select_spmv_unsym(&a, &mut pool, &TuningOptions::default(), &mut timer).unwrap();
        assert_eq!((sel.report.selected, sel.report.selected_jl), (Some("u3"), Some(8)));
    }

    #[test]
    fn execution_budget_and_jl_gate() {
        // nnz = 3*100 - 2 = 298: jl up to 64 qualifies (4*64 = 256 <= 298)
        let a = tridiag(100);
        let mut pool = WorkerPool::new(2).unwrap();
        let sel = select_spmv_unsym(&a, &mut pool, &TuningOptions::default(), &mut WallClock).unwrap();
        let jls: Vec<_> = sel.report.candidates.iter().filter_map(|c| c.jl).collect();
        assert_eq!(jls, vec![8, 16, 32, 64]);
        assert!(sel.report.candidates.iter().all(|c| c.executions <= MAX_EXECUTIONS_PER_CANDIDATE));
        assert_eq!(sel.report.total_executions(), 4 * sel.report.candidates.len());
    }

    #[test]
    fn sym_selection_rules() {
        let s = tridiag(300).upper_triangle();
        let mut pool = WorkerPool::new(3).unwrap();
        let mut timer = stub(&[("s3", None, 0.01)]);
        let sel = select_spmv_sym(&s, &mut pool, &TuningOptions::default(), &mut timer).unwrap();
        assert_eq!(sel.report.selected, Some("s3"));
        let mut timer = stub(&[("s2", None, 0.01), ("s3", None, 0.01)]);
        let sel = select_spmv_sym(&s, &mut pool, &TuningOptions::default(), &mut timer).unwrap();
        assert_eq!(sel.report.selected, Some("s2"));
    }

    #[test]
    fn diagonal_sym_never_disqualified() {
        let s = SymCsrMatrix::from_diagonal(&(1..=50).map(f64::from).collect::<Vec<_>>());
        let mut pool = WorkerPool::new(4).unwrap();
        let sel = select_spmv_sym(&s, &mut pool, &TuningOptions::default(), &mut WallClock).unwrap();
        assert_eq!(sel.report.candidates.len(), 3);
        assert!(sel.report.candidates.iter().all(|c| !c.disqualified));
    }

    #[test]
    fn thread_sweep_adds_worker_counts() {
        let a = tridiag(64);
        let mut pool = WorkerPool::new(4).unwrap();
        let options = TuningOptions {
            jl_candidates: vec![],
            thread_sweep: true,
            ..TuningOptions::default()
        };
        let sel = select_spmv_unsym(&a, &mut pool, &options, &mut WallClock).unwrap();
        let workers: Vec<_> = sel.report.candidates.iter().map(|c| c.workers).collect();
        assert_eq!(workers, vec![1, 1, 2, 2, 4, 4]);
    }

    #[test]
    fn empty_matrix_rejected() {
        let a = CsrMatrix::new(3, vec![0, 0, 0, 0], vec![], vec![]).unwrap();
        let mut pool = WorkerPool::new(1).unwrap();
        assert!(select_spmv_unsym(&a, &mut pool, &TuningOptions::default(), &mut WallClock).is_err());
    }
}
