//! Dense real linear algebra on row-major `f64` matrices.
//!
//! Everything here is a pure function of its inputs. Kernels report their
//! multiply-accumulate counts to a thread-local counter (see [`flops`]) so
//! callers can measure arithmetic cost without timing.

pub mod flops;
mod matrix;
mod qr;
mod randomized;
mod subspace;
mod svd;

use thiserror::Error;

pub use matrix::DenseMatrix;
pub use qr::householder_qr;
pub use randomized::randomized_range_basis;
pub(crate) use randomized::gaussian_matrix;
pub(crate) use subspace::extend_orthonormal;
pub use subspace::{orthonormality_residual, subspace_distance, ORTHONORMAL_TOLERANCE};
pub use svd::{svd, truncate, SvdFactors, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("Jacobi SVD did not converge within {sweeps} sweeps (ill-conditioned input)")]
    NotConverged { sweeps: usize },
    #[error("requested rank {requested} exceeds the maximum {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("rows are not orthonormal: |UU^T - I|_F = {residual:e}")]
    NotOrthonormal { residual: f64 },
}

pub(crate) fn shape_err(msg: impl Into<String>) -> LinalgError {
    LinalgError::Shape(msg.into())
}
