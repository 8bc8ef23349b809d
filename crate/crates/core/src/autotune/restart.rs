//! Restart-frequency adaptation driven by the max/min residual ratio.
//!
//! A window of recent residual norms is kept. Once it holds `t` samples the
//! ratio `max/min` over the window is judged: a ratio below `theta` means the
//! residual has spread over less than that factor, i.e. the solver is
//! stagnating, and the restart frequency is increased.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_THETA: f64 = 10.0;
pub const DEFAULT_WINDOW: usize = 5;

/// `max / min` over the last `t` samples of `window`.
pub fn mm_ratio(window: &[f64], t: usize) -> Result<f64> {
    if t == 0 || window.len() < t {
        return Err(Error::InvalidArgument(format!(
            "mm_ratio needs {t} samples, window holds {}",
            window.len()
        )));
    }
    let recent = &window[window.len() - t..];
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &r in recent {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("residual sample {r} is not a positive finite number")));
        }
        max = max.max(r);
        min = min.min(r);
    }
    Ok(max / min)
}

/// Whether the restart frequency should grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Judgment {
    Keep,
    Increase,
}

#[derive(Debug, Clone)]
pub struct MMRatioMonitor {
    window: VecDeque<f64>,
    t: usize,
    theta: f64,
}

impl MMRatioMonitor {
    pub fn new(t: usize, theta: f64) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidArgument("window length must be at least 1".into()));
        }
        if !(theta > 0.0) {
            return Err(Error::InvalidArgument("theta must be positive".into()));
        }
        Ok(Self {
            window: VecDeque::with_capacity(t),
            t,
            theta,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.t
    }

    /// Adds a sample, dropping the oldest once the window is full.
    pub fn push(&mut self, residual: f64) -> Result<()> {
        if !(residual > 0.0) || !residual.is_finite() {
            return Err(Error::InvalidArgument(format!("residual sample {residual} is not positive")));
        }
        if self.window.len() == self.t {
            self.window.pop_front();
        }
        self.window.push_back(residual);
        Ok(())
    }

    pub fn samples(&self) -> Vec<f64> {
        self.window.iter().copied().collect()
    }

    /// Judges a full window and clears it.
    pub fn judge(&mut self) -> Result<Judgment> {
        let samples = self.samples();
        let ratio = mm_ratio(&samples, self.t)?;
        self.window.clear();
        Ok(if ratio < self.theta {
            Judgment::Increase
        } else {
            Judgment::Keep
        })
    }
}

/// Judges the monitor's window; `Increase` iff the ratio is strictly below theta.
pub fn dafrt_judge(monitor: &mut MMRatioMonitor) -> Result<Judgment> {
    monitor.judge()
}

/// Settings for in-loop restart adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestartTuning {
    pub window: usize,
    pub theta: f64,
    pub increment: usize,
}

impl Default for RestartTuning {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            theta: DEFAULT_THETA,
            increment: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartController {
    msize: usize,
    msize_initial: usize,
    msize_max: usize,
    increment: usize,
    monitor: MMRatioMonitor,
    trajectory: Vec<usize>,
}

impl RestartController {
    pub fn new(msize: usize, msize_max: usize, tuning: RestartTuning) -> Result<Self> {
        if msize < 1 || msize > msize_max {
            return Err(Error::InvalidArgument(format!(
                "restart frequency {msize} outside [1, {msize_max}]"
            )));
        }
        Ok(Self {
            msize,
            msize_initial: msize,
            msize_max,
            increment: tuning.increment,
            monitor: MMRatioMonitor::new(tuning.window, tuning.theta)?,
            trajectory: vec![msize],
        })
    }

    pub fn msize(&self) -> usize {
        self.msize
    }

    pub fn msize_initial(&self) -> usize {
        self.msize_initial
    }

    pub fn msize_max(&self) -> usize {
        self.msize_max
    }

    pub fn increment(&self) -> usize {
        self.increment
    }

    /// msize after every judgment, starting with the initial value.
    pub fn trajectory(&self) -> &[usize] {
        &self.trajectory
    }

    /// Applies a judgment; growth saturates at `msize_max`.
    pub fn update(&mut self, judgment: Judgment) -> usize {
        if judgment == Judgment::Increase {
            self.msize = (self.msize + self.increment).min(self.msize_max);
        }
        self.msize
    }

    /// Records one residual sample; judges and updates when the window fills.
    pub fn observe(&mut self, residual: f64) -> Result<Option<Judgment>> {
        if residual <= 0.0 {
            // exact zero residual: nothing to adapt
            return Ok(None);
        }
        self.monitor.push(residual)?;
        if !self.monitor.is_full() {
            return Ok(None);
        }
        let judgment = self.monitor.judge()?;
        self.update(judgment);
        self.trajectory.push(self.msize);
        Ok(Some(judgment))
    }
}

pub fn restart_update(controller: &mut RestartController, judgment: Judgment) -> usize {
    controller.update(judgment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_examples() {
        assert_eq!(mm_ratio(&[0.5; 5], 5).unwrap(), 1.0);
        let decades = [1e0, 1e-1, 1e-2, 1e-3, 1e-4];
        assert_eq!(mm_ratio(&decades, 5).unwrap(), 1e0 / 1e-4);
        let wobble = [0.9, 1.1, 1.0, 0.95, 1.05];
        assert_eq!(mm_ratio(&wobble, 5).unwrap(), 1.1 / 0.9);
    }

    #[test]
    fn ratio_uses_last_t_samples() {
        assert_eq!(mm_ratio(&[100.0, 2.0, 1.0], 2).unwrap(), 2.0);
    }

    #[test]
    fn ratio_errors() {
        assert!(mm_ratio(&[1.0, 2.0], 3).is_err());
        assert!(mm_ratio(&[1.0, 0.0], 2).is_err());
        assert!(mm_ratio(&[1.0, -2.0], 2).is_err());
    }

    fn judge_of(samples: &[f64]) -> Judgment {
        let mut m = MMRatioMonitor::new(samples.len(), 10.0).unwrap();
        for &s in samples {
            m.push(s).unwrap();
        }
        let j = dafrt_judge(&mut m).unwrap();
        assert!(m.is_empty(), "window is cleared after a judgment");
        j
    }

    #[test]
    fn judgment_threshold() {
        assert_eq!(judge_of(&[1e0, 1e-1, 1e-2, 1e-3, 1e-4]), Judgment::Keep);
        assert_eq!(judge_of(&[0.9, 1.1, 1.0, 0.95, 1.05]), Judgment::Increase);
        // ratio exactly 10 is not stagnation
        assert_eq!(judge_of(&[10.0, 1.0]), Judgment::Keep);
    }

    #[test]
    fn judging_a_partial_window_fails() {
        let mut m = MMRatioMonitor::new(5, 10.0).unwrap();
        m.push(1.0).unwrap();
        assert!(m.judge().is_err());
    }

    #[test]
    fn update_rules() {
        let tuning = RestartTuning::default();
        let mut c = RestartController::new(10, 200, tuning).unwrap();
        assert_eq!(restart_update(&mut c, Judgment::Increase), 15);
        assert_eq!(restart_update(&mut c, Judgment::Keep), 15);
        let mut capped = RestartController::new(198, 200, tuning).unwrap();
        assert_eq!(capped.update(Judgment::Increase), 200);
        assert_eq!(capped.update(Judgment::Increase), 200);
    }

    #[test]
    fn observe_judges_every_window() {
        let mut c = RestartController::new(2, 50, RestartTuning::default()).unwrap();
        for _ in 0..4 {
            assert_eq!(c.observe(1.0).unwrap(), None);
        }
        assert_eq!(c.observe(1.0).unwrap(), Some(Judgment::Increase));
        assert_eq!(c.msize(), 7);
        for k in 0..5 {
            c.observe(10f64.powi(-k)).unwrap();
        }
        assert_eq!(c.msize(), 7);
        assert_eq!(c.trajectory(), &[2, 7, 7]);
    }

    #[test]
    fn invalid_controller() {
        assert!(RestartController::new(0, 10, RestartTuning::default()).is_err());
        assert!(RestartController::new(11, 10, RestartTuning::default()).is_err());
    }
}
