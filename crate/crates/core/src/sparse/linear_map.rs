use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// A linear operator `R^n -> R^m` known only through its action.
pub trait LinearMap<T: Scalar>: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `y = self * x`; `y` is overwritten.
    fn apply_into(&self, x: &[T], y: &mut [T]);

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows()];
        self.apply_into(x, &mut y);
        y
    }

    /// Orthonormal basis of a known kernel; Krylov methods keep their
    /// vectors orthogonal to it when this map is the preconditioner.
    fn kernel(&self) -> Vec<Vec<T>> {
        Vec::new()
    }
}

/// Removes the components of `v` along the orthonormal `basis`.
pub(crate) fn project_kernel<T: Scalar>(basis: &[Vec<T>], v: &mut [T]) {
    for k in basis {
        let c = crate::scalar::dot(k, v);
        crate::scalar::axpy(-c, k, v);
    }
}

impl<T: Scalar> LinearMap<T> for CsrMatrix<T> {
    fn nrows(&self) -> usize {
        CsrMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        CsrMatrix::ncols(self)
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y)
    }
}

impl<T: Scalar, M: LinearMap<T> + ?Sized> LinearMap<T> for Box<M> {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        (**self).apply_into(x, y)
    }
    fn kernel(&self) -> Vec<Vec<T>> {
        (**self).kernel()
    }
}

impl<T: Scalar, M: LinearMap<T> + ?Sized> LinearMap<T> for Arc<M> {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        (**self).apply_into(x, y)
    }
    fn kernel(&self) -> Vec<Vec<T>> {
        (**self).kernel()
    }
}

impl<T: Scalar, M: LinearMap<T> + ?Sized> LinearMap<T> for &M {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        (**self).apply_into(x, y)
    }
    fn kernel(&self) -> Vec<Vec<T>> {
        (**self).kernel()
    }
}

pub type DynMap<T> = Arc<dyn LinearMap<T>>;

/// Identity on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl<T: Scalar> LinearMap<T> for Identity {
    fn nrows(&self) -> usize {
        self.0
    }
    fn ncols(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x)
    }
}

/// Diagonal scaling `y_i = d_i x_i`.
#[derive(Debug, Clone)]
pub struct Diagonal<T>(pub Vec<T>);

impl<T: Scalar> LinearMap<T> for Diagonal<T> {
    fn nrows(&self) -> usize {
        self.0.len()
    }
    fn ncols(&self) -> usize {
        self.0.len()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        for ((yi, &xi), &di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = di * xi;
        }
    }
}

/// `y = c * M x`
pub struct Scaled<T: Scalar> {
    pub factor: T,
    pub inner: DynMap<T>,
}

impl<T: Scalar> LinearMap<T> for Scaled<T> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.inner.apply_into(x, y);
        crate::scalar::scale(self.factor, y);
    }
}

/// Sum of operators with identical shape.
pub struct SumMap<T: Scalar> {
    terms: Vec<DynMap<T>>,
}

impl<T: Scalar> SumMap<T> {
    pub fn new(terms: Vec<DynMap<T>>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Parameter("empty operator sum".into()))?;
        let (m, n) = (first.nrows(), first.ncols());
        for t in &terms {
            if t.nrows() != m || t.ncols() != n {
                return Err(Error::DimensionMismatch { expected: m, got: t.nrows() });
            }
        }
        Ok(Self { terms })
    }
}

impl<T: Scalar> LinearMap<T> for SumMap<T> {
    fn nrows(&self) -> usize {
        self.terms[0].nrows()
    }
    fn ncols(&self) -> usize {
        self.terms[0].ncols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.terms[0].apply_into(x, y);
        let mut tmp = vec![T::zero(); y.len()];
        for t in &self.terms[1..] {
            t.apply_into(x, &mut tmp);
            for (a, &b) in y.iter_mut().zip(&tmp) {
                *a = *a + b;
            }
        }
    }
}

/// Product `M_0 M_1 ... M_k`, applied right to left.
pub struct Composed<T: Scalar> {
    factors: Vec<DynMap<T>>,
}

impl<T: Scalar> Composed<T> {
    pub fn new(factors: Vec<DynMap<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Parameter("empty operator product".into()));
        }
        for w in factors.windows(2) {
            if w[0].ncols() != w[1].nrows() {
                return Err(Error::DimensionMismatch { expected: w[0].ncols(), got: w[1].nrows() });
            }
        }
        Ok(Self { factors })
    }
}

impl<T: Scalar> LinearMap<T> for Composed<T> {
    fn nrows(&self) -> usize {
        self.factors[0].nrows()
    }
    fn ncols(&self) -> usize {
        self.factors.last().map(|f| f.ncols()).unwrap_or(0)
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        let mut cur = x.to_vec();
        for f in self.factors.iter().rev() {
            cur = f.apply(&cur);
        }
        y.copy_from_slice(&cur);
    }
}

/// Block diagonal operator `diag(M_0, ..., M_k)`.
pub struct BlockDiag<T: Scalar> {
    blocks: Vec<DynMap<T>>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
}

impl<T: Scalar> BlockDiag<T> {
    pub fn blocks(&self) -> &[DynMap<T>] {
        &self.blocks
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }
}

/// Assembles `diag(blocks)`.
pub fn block_diag<T: Scalar>(blocks: Vec<DynMap<T>>) -> Result<BlockDiag<T>> {
    if blocks.is_empty() {
        return Err(Error::Parameter("block_diag needs at least one block".into()));
    }
    let mut row_offsets = vec![0];
    let mut col_offsets = vec![0];
    for b in &blocks {
        row_offsets.push(row_offsets.last().unwrap() + b.nrows());
        col_offsets.push(col_offsets.last().unwrap() + b.ncols());
    }
    Ok(BlockDiag { blocks, row_offsets, col_offsets })
}

impl<T: Scalar> LinearMap<T> for BlockDiag<T> {
    fn nrows(&self) -> usize {
        *self.row_offsets.last().unwrap()
    }
    fn ncols(&self) -> usize {
        *self.col_offsets.last().unwrap()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        for (k, b) in self.blocks.iter().enumerate() {
            let xs = &x[self.col_offsets[k]..self.col_offsets[k + 1]];
            let ys = &mut y[self.row_offsets[k]..self.row_offsets[k + 1]];
            b.apply_into(xs, ys);
        }
    }
    fn kernel(&self) -> Vec<Vec<T>> {
        let n = self.ncols();
        let mut out = Vec::new();
        for (k, b) in self.blocks.iter().enumerate() {
            for v in b.kernel() {
                let mut full = vec![T::zero(); n];
                full[self.col_offsets[k]..self.col_offsets[k + 1]].copy_from_slice(&v);
                out.push(full);
            }
        }
        out
    }
}

/// Symmetric saddle-point operator `[[A, Bᵀ], [B, 0]]`.
pub struct SaddleOperator<T: Scalar> {
    a: DynMap<T>,
    b: CsrMatrix<T>,
    bt: CsrMatrix<T>,
}

impl<T: Scalar> SaddleOperator<T> {
    pub fn velocity_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn pressure_dim(&self) -> usize {
        self.b.nrows()
    }
}

pub fn saddle_operator<T: Scalar>(a: DynMap<T>, b: CsrMatrix<T>) -> Result<SaddleOperator<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if b.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.ncols() });
    }
    let bt = b.transpose();
    Ok(SaddleOperator { a, b, bt })
}

impl<T: Scalar> LinearMap<T> for SaddleOperator<T> {
    fn nrows(&self) -> usize {
        self.a.nrows() + self.b.nrows()
    }
    fn ncols(&self) -> usize {
        self.nrows()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        let nu = self.a.nrows();
        let (xu, xp) = x.split_at(nu);
        let (yu, yp) = y.split_at_mut(nu);
        self.a.apply_into(xu, yu);
        let mut tmp = vec![T::zero(); nu];
        self.bt.mul_vec_into(xp, &mut tmp);
        for (a, b) in yu.iter_mut().zip(&tmp) {
            *a = *a + *b;
        }
        self.b.mul_vec_into(xu, yp);
    }
}

/// Densifies an operator by applying it to unit vectors (column-major build,
/// returned row-major).
pub fn densify<T: Scalar, M: LinearMap<T> + ?Sized>(op: &M) -> Vec<Vec<T>> {
    let (m, n) = (op.nrows(), op.ncols());
    let mut out = vec![vec![T::zero(); n]; m];
    let mut e = vec![T::zero(); n];
    let mut col = vec![T::zero(); m];
    for j in 0..n {
        e[j] = T::one();
        op.apply_into(&e, &mut col);
        for i in 0..m {
            out[i][j] = col[i];
        }
        e[j] = T::zero();
    }
    out
}
