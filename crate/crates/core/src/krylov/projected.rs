//! Spectral information from the small Lanczos tridiagonal.

use nalgebra::{DMatrix, SymmetricEigen};

/// Extreme-magnitude spectral estimates from a Lanczos run.
///
/// `alphas` are the diagonal entries of `T_k`, `betas[j]` couples step `j`
/// and `j + 1` (so `betas.len() == alphas.len()` and the last entry is the
/// residual coupling `β_{k+1}`). The largest magnitude comes from the Ritz
/// values, the smallest from the harmonic Ritz values, which bound the
/// smallest eigenvalue magnitude from above.
pub(crate) fn extreme_estimates(alphas: &[f64], betas: &[f64]) -> Option<(f64, f64)> {
    let k = alphas.len();
    if k == 0 {
        return None;
    }
    let t = tridiag(alphas, &betas[..k - 1]);
    let ritz = SymmetricEigen::new(t.clone()).eigenvalues;
    let lmax = ritz.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // harmonic Ritz values θ solve T̄ᵀT̄ s = θ T s; with T̄ᵀT̄ = G Gᵀ the
    // reciprocals 1/θ are the eigenvalues of G⁻¹ T G⁻ᵀ
    let bk = betas.get(k - 1).copied().unwrap_or(0.0);
    let mut gram = &t * &t;
    gram[(k - 1, k - 1)] += bk * bk;
    let lmin = match gram.cholesky() {
        Some(ch) => {
            let l = ch.l();
            let linv = l.clone().try_inverse()?;
            let c = &linv * &t * linv.transpose();
            let c = (&c + c.transpose()) * 0.5;
            let mu = SymmetricEigen::new(c).eigenvalues;
            let mu_max = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if mu_max > 0.0 {
                1.0 / mu_max
            } else {
                ritz.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
            }
        }
        // exact breakdown with singular T: fall back to Ritz values
        None => ritz.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
    };
    Some((lmin, lmax))
}

pub(crate) fn tridiag(alphas: &[f64], off: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_tridiagonal_gives_exact_extremes() {
        // T itself has eigenvalues 2 - 2cos(jπ/(k+1)); with zero residual
        // coupling the harmonic and plain Ritz values coincide
        let k = 6;
        let a = vec![2.0; k];
        let mut b = vec![-1.0; k];
        b[k - 1] = 0.0;
        let (lmin, lmax) = extreme_estimates(&a, &b).unwrap();
        let exact = |j: usize| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (k + 1) as f64).cos();
        assert!((lmin - exact(1)).abs() < 1e-12);
        assert!((lmax - exact(k)).abs() < 1e-12);
    }
}
