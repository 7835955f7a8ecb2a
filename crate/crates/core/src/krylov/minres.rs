//! Preconditioned MINRES (Paige–Saunders) for symmetric indefinite systems.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::krylov::projected::extreme_estimates;
use crate::scalar::{dot, Scalar};
use crate::sparse::{project_kernel, LinearMap};

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norm relative to the initial one, per iteration.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
    pub cond_estimate: f64,
    pub lambda_min_abs: f64,
    pub lambda_max_abs: f64,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinresOptions {
    pub rtol: f64,
    pub maxit: usize,
    /// Compute Ritz-based eigenvalue estimates from the Lanczos coefficients.
    pub spectrum: bool,
}

impl Default for MinresOptions {
    fn default() -> Self {
        MinresOptions { rtol: 1e-12, maxit: 2000, spectrum: true }
    }
}

/// Solves `A x = b` with preconditioner `P ≈ A⁻¹` (applied as a map), starting
/// from `x = 0`. Convergence is measured in the preconditioned residual norm
/// `‖r‖_P = sqrt(rᵀ P r)` relative to its initial value.
pub fn minres<T: Scalar>(
    a: &dyn LinearMap<T>,
    p: &dyn LinearMap<T>,
    b: &[T],
    opts: &MinresOptions,
) -> Result<(Vec<T>, SolveReport)> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.nrows() });
    }
    let start = Instant::now();
    let mut x = vec![T::zero(); n];
    let mut report = SolveReport {
        iterations: 0,
        converged: false,
        residual_history: vec![1.0],
        cond_estimate: 1.0,
        lambda_min_abs: f64::NAN,
        lambda_max_abs: f64::NAN,
        seed: None,
        wall_time_s: 0.0,
        low_confidence: false,
    };

    let ker = p.kernel();
    let mut r1 = b.to_vec();
    project_kernel(&ker, &mut r1);
    let mut y = p.apply(&r1);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < T::zero() {
        return Err(Error::IndefinitePreconditioner(beta1_sq.to_f64_lossy()));
    }
    let beta1 = beta1_sq.sqrt();
    if beta1 == T::zero() {
        report.converged = true;
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut r2 = r1.clone();
    let mut v = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut w1 = vec![T::zero(); n];
    let mut w2 = vec![T::zero(); n];
    let mut oldb = T::zero();
    let mut beta = beta1;
    let mut dbar = T::zero();
    let mut epsln = T::zero();
    let mut phibar = beta1;
    let mut cs = -T::one();
    let mut sn = T::zero();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let rtol = T::lit(opts.rtol);

    for itn in 1..=opts.maxit {
        let s = T::one() / beta;
        for (vi, &yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply_into(&v, &mut y);
        if itn >= 2 {
            let c = beta / oldb;
            for (yi, &ri) in y.iter_mut().zip(&r1) {
                *yi = *yi - c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, &ri) in y.iter_mut().zip(&r2) {
            *yi = *yi - c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        project_kernel(&ker, &mut r2);
        p.apply_into(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < T::zero() {
            return Err(Error::IndefinitePreconditioner(beta_sq.to_f64_lossy()));
        }
        beta = beta_sq.sqrt();
        alphas.push(alfa.to_f64_lossy());
        betas.push(beta.to_f64_lossy());

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(T::epsilon());
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar = sn * phibar;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        let ig = T::one() / gamma;
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * ig;
            x[i] = x[i] + phi * w[i];
        }

        let rel = phibar / beta1;
        report.iterations = itn;
        report.residual_history.push(rel.to_f64_lossy());
        // β = 0 means the Krylov space is invariant: the solution is exact
        if rel <= rtol || beta == T::zero() {
            report.converged = true;
            break;
        }
    }

    if opts.spectrum {
        if let Some((lmin, lmax)) = extreme_estimates(&alphas, &betas) {
            report.lambda_min_abs = lmin;
            report.lambda_max_abs = lmax;
            report.cond_estimate = (lmax / lmin).max(1.0);
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((x, report))
}
