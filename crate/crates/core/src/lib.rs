//! Projector-free interpolatory model reduction for sparse second-order
//! index-3 descriptor systems
//!
//! ```text
//! M x'' + D x' + K x + Gᵀ z = F u,   G x = 0,   y = L x
//! ```
//!
//! The reducer never forms the hidden-manifold projector: interpolation
//! bases come from sparse saddle-point solves, and reduced matrices are
//! two-sided projections of the original sparse blocks. A dense projector
//! path is kept as a test oracle, and dense balanced truncation serves both
//! as the shift-update step and as a baseline.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod benchmarks;
pub mod bt;
pub mod cli;
pub mod error;
pub mod freq;
pub mod io;
pub mod irka;
pub mod linalg;
pub mod mm;
pub mod model;
pub mod plot;
pub mod projection;
pub mod saddle;
pub mod sparse;
pub mod sparse_lu;
pub mod verify;

pub use error::{Error, Result};
pub use irka::{irka_reduce, IrkaOptions, IrkaOutcome, ShiftSet};
pub use model::{validate_system, ReducedSecondOrderModel, SecondOrderIndex3System};
pub use sparse::SparseMatrix;
