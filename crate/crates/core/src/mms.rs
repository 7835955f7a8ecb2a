//! Manufactured Stokes solution and boundary/source data containers.

use std::f64::consts::PI;
use std::sync::Arc;

/// Exact fields of the manufactured solution at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsFields {
    pub u: [f64; 2],
    pub p: f64,
    /// `grad_u[c][d] = ∂u_c/∂x_d`
    pub grad_u: [[f64; 2]; 2],
    pub grad_p: [f64; 2],
    /// Body force `f = -Δu - ∇p`.
    pub f: [f64; 2],
}

/// `p = sin(2π(x - y))`, `u = curl cos(π(2x - y))`.
pub fn mms_fields(x: f64, y: f64) -> MmsFields {
    let theta = PI * (2.0 * x - y);
    let psi = 2.0 * PI * (x - y);
    let (s, c) = theta.sin_cos();
    let pi2 = PI * PI;
    let pi3 = pi2 * PI;
    let cp = psi.cos();
    MmsFields {
        u: [PI * s, 2.0 * PI * s],
        p: psi.sin(),
        grad_u: [[2.0 * pi2 * c, -pi2 * c], [4.0 * pi2 * c, -2.0 * pi2 * c]],
        grad_p: [2.0 * PI * cp, -2.0 * PI * cp],
        f: [5.0 * pi3 * s - 2.0 * PI * cp, 10.0 * pi3 * s + 2.0 * PI * cp],
    }
}

type VecField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
type BoundaryField = Arc<dyn Fn([f64; 2], [f64; 2]) -> [f64; 2] + Send + Sync>;

/// Source and boundary data for one Stokes problem.
#[derive(Clone)]
pub struct ProblemData {
    pub body_force: VecField,
    /// Velocity on `DirichletData` facets; also the normal velocity on free-slip facets.
    pub velocity: VecField,
    /// Traction `∇u·n + p n` given point and outward normal.
    pub traction: BoundaryField,
    /// Tangential part of `∇u·n` on free-slip facets.
    pub tangential_stress: BoundaryField,
    /// Exact solution when known, for error norms.
    pub exact: Option<Arc<dyn Fn([f64; 2]) -> ([f64; 2], f64) + Send + Sync>>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData").field("has_exact", &self.exact.is_some()).finish()
    }
}

impl ProblemData {
    pub fn zero() -> Self {
        ProblemData {
            body_force: Arc::new(|_| [0.0; 2]),
            velocity: Arc::new(|_| [0.0; 2]),
            traction: Arc::new(|_, _| [0.0; 2]),
            tangential_stress: Arc::new(|_, _| [0.0; 2]),
            exact: None,
        }
    }

    pub fn manufactured() -> Self {
        ProblemData {
            body_force: Arc::new(|x| mms_fields(x[0], x[1]).f),
            velocity: Arc::new(|x| mms_fields(x[0], x[1]).u),
            traction: Arc::new(|x, n| {
                let m = mms_fields(x[0], x[1]);
                traction_from(&m.grad_u, m.p, n)
            }),
            tangential_stress: Arc::new(|x, n| {
                let m = mms_fields(x[0], x[1]);
                let g = traction_from(&m.grad_u, 0.0, n);
                let gn = g[0] * n[0] + g[1] * n[1];
                [g[0] - gn * n[0], g[1] - gn * n[1]]
            }),
            exact: Some(Arc::new(|x| {
                let m = mms_fields(x[0], x[1]);
                (m.u, m.p)
            })),
        }
    }

    /// Pressure-driven flow: traction `-p_in n` on the left end, `-p_out n`
    /// on the right end, everything else homogeneous.
    pub fn pressure_drop(length: f64, p_in: f64, p_out: f64) -> Self {
        ProblemData {
            traction: Arc::new(move |x, n| {
                let s = if x[0] < 0.5 * length { -p_in } else { -p_out };
                [s * n[0], s * n[1]]
            }),
            ..Self::zero()
        }
    }
}

pub fn traction_from(grad_u: &[[f64; 2]; 2], p: f64, n: [f64; 2]) -> [f64; 2] {
    [
        grad_u[0][0] * n[0] + grad_u[0][1] * n[1] + p * n[0],
        grad_u[1][0] * n[0] + grad_u[1][1] * n[1] + p * n[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(mms_fields(0.0, 0.0).p, 0.0);
        assert!((mms_fields(0.25, 0.0).p - 1.0).abs() < 1e-15);
    }
}
