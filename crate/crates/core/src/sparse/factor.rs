//! Sparse LDLᵀ factorization of symmetric positive (semi-)definite matrices.
//!
//! Up-looking elimination with an elimination tree, preceded by an AMD
//! fill-reducing permutation. Semidefinite matrices are handled by pinning a
//! set of unknowns that makes the declared nullspace basis invertible; the
//! reduced matrix is then SPD and solves are projected onto the orthogonal
//! complement of the nullspace.

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Scalar};
use crate::sparse::{CsrMatrix, LinearMap};

/// Relative pivot tolerance against the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SymFactor<T> {
    n: usize,
    /// Indices of the reduced system in the full numbering.
    kept: Vec<usize>,
    pinned: Vec<usize>,
    /// Orthonormal nullspace basis (possibly empty).
    nullspace: Vec<Vec<T>>,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
    flops: f64,
}

/// Factors a symmetric matrix. Without `nullspace` the matrix must be SPD;
/// with it, the matrix must be SPSD with exactly that kernel.
pub fn factor_spd<T: Scalar>(a: &CsrMatrix<T>, nullspace: Option<&[Vec<T>]>) -> Result<SymFactor<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if !a.is_symmetric_flagged() {
        a.check_symmetric(1e-10)?;
    }
    let basis = match nullspace {
        Some(z) if !z.is_empty() => orthonormalize(z, n)?,
        _ => Vec::new(),
    };
    let pinned = choose_pinned(&basis, n);
    let mut is_pinned = vec![false; n];
    for &p in &pinned {
        is_pinned[p] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !is_pinned[i]).collect();
    let reduced = if pinned.is_empty() { a.clone() } else { a.select(&kept, &kept) };

    let m = reduced.nrows();
    let perm = if m > 0 {
        let (p, _pinv, _info) = amd::order::<usize>(m, reduced.indptr(), reduced.indices(), &amd::Control::default())
            .map_err(|s| Error::Parameter(format!("AMD ordering failed: {s:?}")))?;
        p
    } else {
        Vec::new()
    };
    let mut f = SymFactor {
        n,
        kept,
        pinned,
        nullspace: basis,
        perm,
        lp: Vec::new(),
        li: Vec::new(),
        lx: Vec::new(),
        d: Vec::new(),
        flops: 0.0,
    };
    f.factor_numeric(&reduced)?;
    Ok(f)
}

fn orthonormalize<T: Scalar>(z: &[Vec<T>], n: usize) -> Result<Vec<Vec<T>>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(z.len());
    for v in z {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let mut w = v.clone();
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for q in &out {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let nw = norm2(&w);
        if nw <= T::lit(1e-12) * norm2(v).max(T::min_positive_value()) {
            return Err(Error::Parameter("nullspace basis is linearly dependent".into()));
        }
        w.iter_mut().for_each(|x| *x = *x / nw);
        out.push(w);
    }
    Ok(out)
}

/// Greedy row pivoting on the basis so that `Z[pinned, :]` is nonsingular.
fn choose_pinned<T: Scalar>(basis: &[Vec<T>], n: usize) -> Vec<usize> {
    let mut work: Vec<Vec<T>> = basis.to_vec();
    let mut pinned = Vec::with_capacity(basis.len());
    for j in 0..work.len() {
        let (piv, _) = (0..n)
            .filter(|i| !pinned.contains(i))
            .map(|i| (i, work[j][i].abs()))
            .fold((0, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        let pv = work[j][piv];
        for l in j + 1..work.len() {
            let c = work[l][piv] / pv;
            let (head, tail) = work.split_at_mut(l);
            axpy(-c, &head[j], &mut tail[0]);
        }
        pinned.push(piv);
    }
    pinned.sort_unstable();
    pinned
}

impl<T: Scalar> SymFactor<T> {
    fn factor_numeric(&mut self, a: &CsrMatrix<T>) -> Result<()> {
        let n = a.nrows();
        let perm = &self.perm;
        let mut pinv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        let (ap, ai, ax) = (a.indptr(), a.indices(), a.data());

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k];
            for p in ap[kk]..ap[kk + 1] {
                let mut i = pinv[ai[p]];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == usize::MAX {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![T::zero(); total];
        let mut d = vec![T::zero(); n];

        let max_diag = a.diagonal().into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = T::lit(PIVOT_TOL) * max_diag;

        // numeric
        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = usize::MAX);
        let mut flops = 0.0f64;
        for k in 0..n {
            y[k] = T::zero();
            let mut top = n;
            flag[k] = k;
            let kk = perm[k];
            for p in ap[kk]..ap[kk + 1] {
                let mut i = pinv[ai[p]];
                if i <= k {
                    y[i] = y[i] + ax[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = T::zero();
            while top < n {
                let i = pattern[top];
                let yi = y[i];
                y[i] = T::zero();
                let p2 = lp[i] + lnz[i];
                for p in lp[i]..p2 {
                    y[li[p]] = y[li[p]] - lx[p] * yi;
                }
                flops += 2.0 * (p2 - lp[i]) as f64;
                let l_ki = yi / d[i];
                d[k] = d[k] - l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
                top += 1;
            }
            if !(d[k] > tol) {
                let full_index = self.kept[perm[k]];
                return Err(Error::PivotBreakdown { index: full_index, value: d[k].to_f64_lossy() });
            }
        }
        self.lp = lp;
        self.li = li;
        self.lx = lx;
        self.d = d;
        self.flops = flops;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal entries of `L`.
    pub fn fill(&self) -> usize {
        self.li.len()
    }

    /// Floating point operations spent in the numeric factorization.
    pub fn flops(&self) -> f64 {
        self.flops
    }

    pub fn nullspace(&self) -> &[Vec<T>] {
        &self.nullspace
    }

    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    /// Solves `A x = b`. For a deflated factor the result is the minimum-norm
    /// solution of `A x = (I - P_Z) b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[T], x: &mut [T]) {
        assert_eq!(b.len(), self.n, "solve: rhs length");
        assert_eq!(x.len(), self.n, "solve: output length");
        let mut rhs = b.to_vec();
        self.project_out(&mut rhs);
        let m = self.kept.len();
        let mut w = vec![T::zero(); m];
        for k in 0..m {
            w[k] = rhs[self.kept[self.perm[k]]];
        }
        for j in 0..m {
            let wj = w[j];
            for p in self.lp[j]..self.lp[j + 1] {
                w[self.li[p]] = w[self.li[p]] - self.lx[p] * wj;
            }
        }
        for j in 0..m {
            w[j] = w[j] / self.d[j];
        }
        for j in (0..m).rev() {
            let mut acc = w[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc = acc - self.lx[p] * w[self.li[p]];
            }
            w[j] = acc;
        }
        x.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..m {
            x[self.kept[self.perm[k]]] = w[k];
        }
        self.project_out(x);
    }

    /// `v <- (I - Z Zᵀ) v`
    pub fn project_out(&self, v: &mut [T]) {
        for z in &self.nullspace {
            let c = dot(v, z);
            axpy(-c, z, v);
        }
    }
}

impl<T: Scalar> LinearMap<T> for SymFactor<T> {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.solve_into(x, y)
    }
    fn kernel(&self) -> Vec<Vec<T>> {
        self.nullspace.clone()
    }
}
