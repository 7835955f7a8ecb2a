//! Dense generalized eigenvalue oracle for small systems.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sparse::{densify, CsrMatrix, LinearMap};

pub const DENSE_CAP: usize = 4000;

pub struct DensePencil {
    /// Eigenvalues sorted by increasing magnitude.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns, normalized in the `P_inv` inner product.
    pub vectors: DMatrix<f64>,
}

fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for (j, v) in m.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::SizeCap { n, cap: DENSE_CAP });
    }
    Ok(())
}

fn sort_pairs(values: &[f64], vectors: &DMatrix<f64>) -> DensePencil {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()));
    let vals = idx.iter().map(|&i| values[i]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), idx.len(), |r, c| vectors[(r, idx[c])]);
    DensePencil { values: vals, vectors: vecs }
}

/// Full spectrum of `A x = λ P_inv x` (Cholesky of `P_inv` + symmetric eigensolve).
pub fn dense_eig_oracle(a: &CsrMatrix<f64>, p_inv: &CsrMatrix<f64>) -> Result<Vec<f64>> {
    Ok(dense_eig_pairs(a, p_inv)?.values)
}

pub fn dense_eig_pairs(a: &CsrMatrix<f64>, p_inv: &CsrMatrix<f64>) -> Result<DensePencil> {
    let n = a.nrows();
    check_cap(n)?;
    if a.ncols() != n || p_inv.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, got: p_inv.nrows() });
    }
    let ad = to_dense(a);
    let md = to_dense(p_inv);
    let chol = md.cholesky().ok_or_else(|| Error::Eigen("P_inv is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.try_inverse().ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = &linv * ad * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let vectors = linv.transpose() * eig.eigenvectors;
    Ok(sort_pairs(eig.eigenvalues.as_slice(), &vectors))
}

/// Spectrum of `P A` for a symmetric positive (semi-)definite map `P`,
/// computed as the spectrum of `P^{1/2} A P^{1/2}` restricted to the range of `P`.
pub fn dense_preconditioned_spectrum(a: &dyn LinearMap<f64>, p: &dyn LinearMap<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    check_cap(n)?;
    if p.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.nrows() });
    }
    let ad = DMatrix::from_fn(n, n, {
        let rows = densify(a);
        move |i, j| rows[i][j]
    });
    let pd = {
        let rows = densify(p);
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        (&m + m.transpose()) * 0.5
    };
    let pe = SymmetricEigen::new(pd);
    let pmax = pe.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if pe.eigenvalues.iter().any(|&v| v < -1e-10 * pmax) {
        return Err(Error::IndefinitePreconditioner(pe.eigenvalues.min()));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| pe.eigenvalues[i] > 1e-10 * pmax).collect();
    // columns V_k sqrt(λ_k) span the range of P^{1/2}
    let s = DMatrix::from_fn(n, keep.len(), |r, c| pe.eigenvectors[(r, keep[c])] * pe.eigenvalues[keep[c]].sqrt());
    let c = s.transpose() * ad * &s;
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(vals)
}

/// `(λ_min_abs, λ_max_abs)` of a spectrum, ignoring eigenvalues below
/// `rel_zero` relative to the largest (declared kernels).
pub fn extreme_magnitudes(values: &[f64], rel_zero: f64) -> (f64, f64) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().map(|v| v.abs()).filter(|&v| v > rel_zero * max).fold(f64::INFINITY, f64::min);
    (min, max)
}
