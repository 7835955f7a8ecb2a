//! Krylov solvers and spectrum estimation for preconditioned saddle systems.

mod dense;
mod lanczos;
mod minres;
mod projected;

pub use dense::{
    dense_eig_oracle, dense_eig_pairs, dense_preconditioned_spectrum, extreme_magnitudes, DensePencil, DENSE_CAP,
};
pub use lanczos::{estimate_extreme_eigs, EigEstimate, EigOptions};
pub use minres::{minres, MinresOptions, SolveReport};
