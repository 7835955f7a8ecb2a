//! Extreme-magnitude eigenvalue estimation of a preconditioned symmetric
//! operator by Lanczos with full reorthogonalization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::krylov::projected::extreme_estimates;
use crate::scalar::{axpy, dot, Scalar};
use crate::sparse::{project_kernel, LinearMap};

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub probes: usize,
    /// Relative stagnation tolerance between checkpoints.
    pub tol: f64,
    /// Step cap per probe; `None` uses `max(200, 4 sqrt(n))`.
    pub max_steps: Option<usize>,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { probes: 1, tol: 1e-3, max_steps: None, check_every: 10, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub lambda_min_abs: f64,
    pub lambda_max_abs: f64,
    pub steps: usize,
    pub low_confidence: bool,
}

impl EigEstimate {
    pub fn condition(&self) -> f64 {
        (self.lambda_max_abs / self.lambda_min_abs).max(1.0)
    }
}

/// Estimates the smallest and largest eigenvalue magnitudes of `P A`, i.e.
/// of the pencil `(A, P⁻¹)`. Estimates are averaged over `probes` seeded
/// random starting vectors.
pub fn estimate_extreme_eigs<T: Scalar>(
    a: &dyn LinearMap<T>,
    p: &dyn LinearMap<T>,
    opts: &EigOptions,
) -> Result<EigEstimate> {
    let n = a.nrows();
    if a.ncols() != n || p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.nrows() });
    }
    if n == 0 {
        return Err(Error::Parameter("empty operator".into()));
    }
    let cap = opts
        .max_steps
        .unwrap_or_else(|| 200.max((4.0 * (n as f64).sqrt()) as usize))
        .min(n)
        .max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = opts.probes.max(1);
    let (mut smin, mut smax, mut steps) = (0.0, 0.0, 0);
    let mut low = false;
    for _ in 0..probes {
        let start: Vec<T> = (0..n)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                T::lit(g)
            })
            .collect();
        let est = lanczos_run(a, p, start, cap, opts)?;
        smin += est.lambda_min_abs;
        smax += est.lambda_max_abs;
        steps += est.steps;
        low |= est.low_confidence;
    }
    let k = probes as f64;
    Ok(EigEstimate { lambda_min_abs: smin / k, lambda_max_abs: smax / k, steps: steps / probes, low_confidence: low })
}

fn lanczos_run<T: Scalar>(
    a: &dyn LinearMap<T>,
    p: &dyn LinearMap<T>,
    start: Vec<T>,
    cap: usize,
    opts: &EigOptions,
) -> Result<EigEstimate> {
    let n = a.nrows();
    // basis u_j (P⁻¹-orthonormal) and its image q_j = P⁻¹ u_j
    let mut us: Vec<Vec<T>> = Vec::with_capacity(cap);
    let mut qs: Vec<Vec<T>> = Vec::with_capacity(cap);
    let mut alphas: Vec<f64> = Vec::with_capacity(cap);
    let mut betas: Vec<f64> = Vec::with_capacity(cap);

    let ker = p.kernel();
    let mut wv = start;
    project_kernel(&ker, &mut wv);
    let mut z = p.apply(&wv);
    let b0 = dot(&wv, &z);
    if b0 <= T::zero() {
        return Err(Error::IndefinitePreconditioner(b0.to_f64_lossy()));
    }
    let mut beta = b0.sqrt();
    let mut history: Vec<(f64, f64)> = Vec::new();
    let check = opts.check_every.max(1);
    let mut converged = false;
    let mut au = vec![T::zero(); n];

    for j in 0..cap {
        let inv = T::one() / beta;
        let u: Vec<T> = z.iter().map(|&v| v * inv).collect();
        let q: Vec<T> = wv.iter().map(|&v| v * inv).collect();
        a.apply_into(&u, &mut au);
        let mut w = au.clone();
        if j > 0 {
            axpy(-T::lit(betas[j - 1]), &qs[j - 1], &mut w);
        }
        let alpha = dot(&w, &u);
        axpy(-alpha, &q, &mut w);
        us.push(u);
        qs.push(q);
        // two passes of classical Gram-Schmidt in the P⁻¹ inner product
        for _ in 0..2 {
            for (ui, qi) in us.iter().zip(&qs) {
                let c = dot(&w, ui);
                axpy(-c, qi, &mut w);
            }
        }
        project_kernel(&ker, &mut w);
        p.apply_into(&w, &mut z);
        let bsq = dot(&w, &z);
        if bsq < T::zero() && bsq.abs() > T::lit(1e-8) * alpha.abs() * alpha.abs() {
            return Err(Error::IndefinitePreconditioner(bsq.to_f64_lossy()));
        }
        beta = bsq.max(T::zero()).sqrt();
        alphas.push(alpha.to_f64_lossy());
        betas.push(beta.to_f64_lossy());
        wv = w;

        let steps = j + 1;
        let invariant = beta.to_f64_lossy() <= 1e-12 * alphas.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if steps % check == 0 || invariant || steps == cap {
            if let Some(e) = extreme_estimates(&alphas, &betas) {
                history.push(e);
            }
            let h = history.len();
            if invariant {
                converged = true;
                break;
            }
            if h >= 3 {
                let stable = (h - 2..h).all(|i| {
                    let (a0, b0) = history[i - 1];
                    let (a1, b1) = history[i];
                    ((a1 - a0) / a1).abs() <= opts.tol && ((b1 - b0) / b1).abs() <= opts.tol
                });
                if stable {
                    converged = true;
                    break;
                }
            }
        }
    }
    let (lmin, lmax) = *history.last().ok_or_else(|| Error::Eigen("no Lanczos steps".into()))?;
    Ok(EigEstimate { lambda_min_abs: lmin, lambda_max_abs: lmax, steps: alphas.len(), low_confidence: !converged })
}
