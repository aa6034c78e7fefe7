//! Low-rank SVD memory banks for streaming feature sequences.
//!
//! A memory bank of per-clip feature rows is compressed into the top `n_c`
//! right singular directions of the stacked memory matrix. Query features are
//! then projected onto and reconstructed from that basis instead of attending
//! over every stored row. The basis can also be maintained online, one clip at
//! a time, with a forgetting factor and without retaining past clips.
//!
//! Modules:
//! - [`linalg`]: dense kernels (Householder QR, Jacobi SVD, randomized range
//!   finder, projector distance).
//! - [`bank`]: sliding-window container of clip features.
//! - [`basis`]: truncated subspace basis and projection-reconstruction.
//! - [`online`]: incremental basis updates with a forgetting factor.
//! - [`attention`]: softmax cross-attention baseline and FLOP counters.
//! - [`io`]: bank and basis file formats, synthetic planted-subspace streams.

pub mod attention;
pub mod bank;
pub mod basis;
pub mod error;
pub mod io;
pub mod linalg;
pub mod online;

pub use bank::{ClipFeatures, MemoryBank, RetentionMode};
pub use basis::{compute_basis, BasisMethod, SubspaceBasis};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LinalgError, SvdFactors};
pub use online::{OnlineMemory, OnlineState};
