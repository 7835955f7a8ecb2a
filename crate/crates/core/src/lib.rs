//! Block preconditioners for the Stokes problem in long, thin channels.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disc_fv;
pub mod disc_th;
pub mod error;
pub mod geometry;
pub mod krylov;
pub mod mms;
pub mod norms;
pub mod precond;
pub mod scalar;
pub mod sparse;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SparseMatrix = sparse::CsrMatrix<f64>;
pub type SparseMatrixF32 = sparse::CsrMatrix<f32>;
pub type Factor = sparse::SymFactor<f64>;

pub use system::{Backend, StokesSystem};
