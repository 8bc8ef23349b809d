//! Auto-tuned sparse iterative solvers.
//!
//! The crate is organised bottom-up:
//!
//! - [`sparse`]: CRS storage, Matrix Market I/O and kernel execution plans.
//! - [`spmv`]: the parallel SpMV kernels and their sequential reference.
//! - [`autotune`]: empirical kernel selection and restart-frequency adaptation.
//! - [`krylov`]: GMRES(m), BiCGStab, restarted Lanczos/Arnoldi, Gram-Schmidt
//!   variants and ILU(0).
//! - [`policy`]: policy files, workspace planning and the meta-solvers.
//! - [`gen`]: generators for the test matrices used by the benchmarks.

pub mod autotune;
pub mod error;
pub mod gen;
pub mod krylov;
pub mod policy;
pub mod sparse;
pub mod spmv;

pub use error::{Error, Result};
