//! Run-time auto-tuning: kernel selection before iterating and restart
//! adaptation inside the iteration loop.

mod restart;
mod select;

pub use restart::{
    dafrt_judge, mm_ratio, restart_update, Judgment, MMRatioMonitor, RestartController, RestartTuning, DEFAULT_THETA,
    DEFAULT_WINDOW,
};
pub use select::{
    select_spmv_sym, select_spmv_unsym, CandidateId, CandidateTiming, KernelTag, Selection, TrialTimer,
    TuningOptions, TuningReport, WallClock, DEFAULT_JL_CANDIDATES, MAX_EXECUTIONS_PER_CANDIDATE,
};
