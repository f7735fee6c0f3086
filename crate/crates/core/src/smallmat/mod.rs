//! Dense kernels for the small (d ≤ 8) real and complex matrices that show up
//! in flux splittings and frequency matrices.
//!
//! Everything here is value-semantic: functions take references and return
//! fresh values, so they can be called from parallel parameter sweeps.

mod eig;
mod expm;
mod lu;
mod mat;

pub use eig::{balance, eig, eig_real, real_eigenvectors, Balanced, Spectrum};
pub use expm::expm;
pub use lu::{rank, solve_linear, Lu};
pub use mat::{commutator, Mat, MatC, MatR, Scalar};

use thiserror::Error;

/// Failures of the small-matrix kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {actual}")]
    BadLength {
        dim: usize,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("matrix is singular to working precision (condition estimate {cond_estimate:e})")]
    Singular { cond_estimate: f64 },
    #[error("QR iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
