use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and no explicit
/// zeros are stored once a matrix has been built through [`TripletBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.nrows && col < self.ncols, "({row}, {col}) out of bounds");
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> CsrMatrix<T> {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<T> = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v = v + v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != T::zero() {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, data, symmetric: false }
    }

    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(Error::DimensionMismatch { expected: nrows + 1, got: indptr.len() });
        }
        if indices.len() != data.len() || indptr[nrows] != data.len() {
            return Err(Error::DimensionMismatch { expected: indptr[nrows], got: data.len() });
        }
        for i in 0..nrows {
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= ncols) {
                return Err(Error::Parameter(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, data, symmetric: false })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let entries = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let mut m = Self::from_triplets(n, n, entries);
        m.symmetric = true;
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.data[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.data[range.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x` with row-major accumulation.
    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    #[inline]
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "spmv: input length");
        assert_eq!(y.len(), self.nrows, "spmv: output length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc = acc + self.data[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    /// `y = Aᵀ x`
    pub fn mul_transpose_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] = y[self.indices[k]] + self.data[k] * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let c = self.indices[k];
                let dst = next[c];
                indices[dst] = i;
                data[dst] = self.data[k];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
            symmetric: self.symmetric,
        }
    }

    /// Checks symmetry to `rel_tol * max|a_ij|` and sets the symmetry flag.
    pub fn into_symmetric(mut self, rel_tol: f64) -> Result<Self> {
        self.check_symmetric(rel_tol)?;
        self.symmetric = true;
        Ok(self)
    }

    pub fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: self.ncols });
        }
        let scale = self.max_abs().to_f64_lossy();
        let tol = rel_tol * scale;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let w = self.get(j, i);
                if (v - w).abs().to_f64_lossy() > tol {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = *v * a);
        out
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: T, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: other.nrows });
        }
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            entries.extend(self.row(i).map(|(j, v)| (i, j, v)));
            entries.extend(other.row(i).map(|(j, v)| (i, j, a * v)));
        }
        let mut m = Self::from_triplets(self.nrows, self.ncols, entries);
        m.symmetric = self.symmetric && other.symmetric;
        Ok(m)
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: other.nrows });
        }
        let mut entries = Vec::new();
        let mut acc = vec![T::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = T::zero();
                        touched.push(j);
                    }
                    acc[j] = acc[j] + a * b;
                }
            }
            for &j in &touched {
                entries.push((i, j, acc[j]));
            }
        }
        Ok(Self::from_triplets(self.nrows, other.ncols, entries))
    }

    /// Extracts the submatrix with the given (ordered) rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut entries = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                let nj = col_map[j];
                if nj != usize::MAX {
                    entries.push((ni, nj, v));
                }
            }
        }
        let mut m = Self::from_triplets(rows.len(), cols.len(), entries);
        m.symmetric = self.symmetric && rows == cols;
        m
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let sym = if self.symmetric { "symmetric" } else { "general" };
        writeln!(w, "%%MatrixMarket matrix coordinate real {sym}")?;
        let stored: Vec<(usize, usize, T)> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .filter(|&(i, j, _)| !self.symmetric || j <= i)
            .collect();
        writeln!(w, "{} {} {}", self.nrows, self.ncols, stored.len())?;
        for (i, j, v) in stored {
            writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v.to_f64_lossy())?;
        }
        Ok(())
    }
}
