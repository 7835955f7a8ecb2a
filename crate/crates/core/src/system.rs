//! Assembled Stokes saddle systems shared by both discretizations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::disc_fv::FvLayout;
use crate::disc_th::ThLayout;
use crate::error::Result;
use crate::geometry::ChannelGeometry;
use crate::sparse::{saddle_operator, CsrMatrix, DynMap, SaddleOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Fv,
    Th,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Fv => "fv",
            Backend::Th => "th",
        }
    }
}

/// Status of one velocity slot or node component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Unknown(usize),
    /// Eliminated, with its prescribed value.
    Known(f64),
    Absent,
}

#[derive(Debug, Clone)]
pub enum Layout {
    Fv(FvLayout),
    Th(ThLayout),
}

/// `[[A, Bᵀ], [B, 0]] (u, p) = (f, g)` with `A` the velocity Laplacian,
/// `B` the divergence and `M_p` the pressure mass matrix.
#[derive(Debug, Clone)]
pub struct StokesSystem {
    pub backend: Backend,
    pub geometry: ChannelGeometry,
    pub a: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
    pub mp: CsrMatrix<f64>,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    /// Component and location of each velocity unknown.
    pub velocity_dofs: Vec<(usize, [f64; 2])>,
    pub pressure_points: Vec<[f64; 2]>,
    pub singular_pressure: bool,
    pub singular_velocity: bool,
    /// Orthonormal basis of the kernel of `A` (empty unless `singular_velocity`).
    pub velocity_kernel: Vec<Vec<f64>>,
    pub layout: Layout,
}

impl StokesSystem {
    pub fn nu(&self) -> usize {
        self.a.nrows()
    }

    pub fn np(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.nu() + self.np()
    }

    pub fn operator(&self) -> Result<SaddleOperator<f64>> {
        let a: DynMap<f64> = Arc::new(self.a.clone());
        saddle_operator(a, self.b.clone())
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = self.rhs_u.clone();
        r.extend_from_slice(&self.rhs_p);
        r
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.nu())
    }

    /// Assembled saddle matrix (for dense checks on small systems).
    pub fn saddle_matrix(&self) -> CsrMatrix<f64> {
        let (nu, np) = (self.nu(), self.np());
        let mut t = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz());
        for i in 0..nu {
            for (j, v) in self.a.row(i) {
                t.push((i, j, v));
            }
        }
        for q in 0..np {
            for (j, v) in self.b.row(q) {
                t.push((nu + q, j, v));
                t.push((j, nu + q, v));
            }
        }
        CsrMatrix::from_triplets(nu + np, nu + np, t)
    }

    /// Constant pressure vector normalized in the Euclidean norm.
    pub fn pressure_constant(&self) -> Vec<f64> {
        let np = self.np();
        vec![1.0 / (np as f64).sqrt(); np]
    }
}
