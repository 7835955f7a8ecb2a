//! Sparse matrices, direct factorization and the linear-map contract.

mod csr;
mod factor;
mod linear_map;

pub use csr::{CsrMatrix, TripletBuilder};
pub use factor::{factor_spd, SymFactor, PIVOT_TOL};
pub(crate) use linear_map::project_kernel;
pub use linear_map::{
    block_diag, densify, saddle_operator, BlockDiag, Composed, Diagonal, DynMap, Identity, LinearMap,
    SaddleOperator, Scaled, SumMap,
};
