//! Krylov solvers, Gram-Schmidt variants and the ILU(0) preconditioner.

mod bicgstab;
mod config;
mod eigen;
mod gmres;
mod ilu;
mod ortho;
mod residual;
pub mod vecops;

pub use bicgstab::bicgstab;
pub use config::{workspace, EigenResult, EigenVector, KrylovConfig, RestartEvent, SolverResult, Termination};
pub use eigen::{arnoldi_process, arnoldi_restarted, lanczos_restarted, ArnoldiFactorization};
pub use gmres::gmres_m;
pub use ilu::{ilu0_apply, ilu0_factorize, IluFactors};
pub use ortho::{orthogonalize, orthogonalize_in_place, OrthoVariant, Orthogonalized, BCGS_DEFAULT_BLOCK};
pub use residual::{rayleigh_quotient, true_residual_eigen, true_residual_eigen_pair, true_residual_linear};
