use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;

use super::ortho::OrthoVariant;
use crate::autotune::RestartTuning;

#[derive(Debug, Clone)]
pub struct KrylovConfig {
    /// Initial restart frequency.
    pub restart_m: usize,
    /// Ceiling for restart adaptation.
    pub m_max: usize,
    /// Relative residual target for linear solves, absolute Ritz residual for eigensolvers.
    pub tol: f64,
    /// Inner iterations (GMRES/Arnoldi/Lanczos steps, BiCGStab sweeps).
    pub max_iters: usize,
    pub max_time: Duration,
    pub ortho: OrthoVariant,
    /// In-loop restart adaptation; `None` keeps `restart_m` fixed.
    pub restart_tuning: Option<RestartTuning>,
    /// Starting guess for linear solves; zero when absent.
    pub initial_guess: Option<Vec<f64>>,
    /// Seed for eigensolver start vectors.
    pub seed: u64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            restart_m: 30,
            m_max: 30,
            tol: 1e-8,
            max_iters: 10_000,
            max_time: Duration::from_secs(1000),
            ortho: OrthoVariant::Mgs,
            restart_tuning: None,
            initial_guess: None,
            seed: 0x5eed,
        }
    }
}

impl KrylovConfig {
    pub(crate) fn validate(&self) -> crate::Result<()> {
        if self.restart_m < 1 || self.restart_m > self.m_max {
            return Err(crate::Error::InvalidArgument(format!(
                "restart_m {} must lie in [1, m_max={}]",
                self.restart_m, self.m_max
            )));
        }
        if !(self.tol > 0.0) {
            return Err(crate::Error::InvalidArgument("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Termination {
    Converged,
    MaxIterations,
    Timeout,
    Breakdown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RestartEvent {
    /// Inner iterations completed when the restart happened.
    pub iteration: usize,
    /// Restart frequency used for the next cycle.
    pub msize: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    #[serde(skip)]
    pub x: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub restarts: Vec<RestartEvent>,
    /// Restart frequency after each adaptation judgment, starting with the initial one.
    pub msize_trajectory: Vec<usize>,
    /// Recurrence residual ‖r‖/‖b‖ after each inner iteration.
    pub residual_history: Vec<f64>,
    pub recurrence_residual: f64,
    pub true_residual: f64,
    pub fault_convergence: bool,
    pub elapsed: f64,
    pub workspace_bytes: u64,
}

impl SolverResult {
    pub(crate) fn finish_accuracy(&mut self, tol: f64) {
        self.fault_convergence = self.converged && self.true_residual > tol;
    }
}

/// Eigenvector of a Ritz pair; complex pairs keep real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenVector {
    Real(Vec<f64>),
    Complex { re: Vec<f64>, im: Vec<f64> },
}

impl EigenVector {
    pub fn norm(&self) -> f64 {
        match self {
            EigenVector::Real(v) => super::vecops::norm2(v),
            EigenVector::Complex { re, im } => {
                (super::vecops::dot(re, re) + super::vecops::dot(im, im)).sqrt()
            }
        }
    }

    pub fn real_part(&self) -> &[f64] {
        match self {
            EigenVector::Real(v) => v,
            EigenVector::Complex { re, .. } => re,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalues: Vec<Complex64>,
    #[serde(skip)]
    pub eigenvectors: Vec<EigenVector>,
    /// ‖A·v − λ·v‖₂ per pair.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest Ritz residual estimate at exit (what the convergence test saw).
    pub recurrence_residual: f64,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub restarts: Vec<RestartEvent>,
    pub msize_trajectory: Vec<usize>,
    /// Largest unconverged Ritz residual estimate after each restart cycle.
    pub residual_history: Vec<f64>,
    pub fault_convergence: bool,
    pub elapsed: f64,
    pub workspace_bytes: u64,
}

impl EigenResult {
    /// Real parts of the eigenvalues.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

fn serialize_complex<S: serde::Serializer>(values: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for z in values {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Workspace model shared by the solvers and the policy planner, in bytes.
pub mod workspace {
    /// Krylov basis of `m + 2` vectors plus the `(m + 2)²` Hessenberg matrix.
    pub fn arnoldi_bytes(n: usize, m: usize) -> u64 {
        let (n, m2) = (n as u64, m as u64 + 2);
        8 * (n * m2 + m2 * m2)
    }

    /// As Arnoldi plus the two tridiagonal diagonals.
    pub fn lanczos_bytes(n: usize, m: usize) -> u64 {
        arnoldi_bytes(n, m) + 8 * 2 * (m as u64 + 2)
    }

    /// Eight work vectors.
    pub fn bicgstab_bytes(n: usize) -> u64 {
        8 * 8 * n as u64
    }
}
