//! Block-diagonal preconditioners `diag(N, S)` for the Stokes saddle system.
//!
//! `N` is an exact solve with the velocity Laplacian. The pressure block is
//! `M⁻¹`, optionally plus the inverse of a weighted pressure Laplacian on
//! the fine space (`K`) or on a coarse column partition (`K_H`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::disc_th::{p1_stiffness, TriGeom};
use crate::error::{Error, Result};
use crate::geometry::{
    build_coarse_partition, default_target_h, width_field, BoundaryTag, CoarsePartition, Side, WidthField,
};
use crate::krylov::{minres, MinresOptions, SolveReport};
use crate::sparse::{factor_spd, CsrMatrix, LinearMap, SymFactor, TripletBuilder};
use crate::system::{Layout, StokesSystem};

/// Parallel-plate mobility constant.
pub const LUBRICATION_ALPHA: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    Standard,
    Sum,
    Coarse,
    VarW,
    Aniso,
}

impl PrecondKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => PrecondKind::Standard,
            "sum" => PrecondKind::Sum,
            "coarse" => PrecondKind::Coarse,
            "varw" => PrecondKind::VarW,
            "aniso" => PrecondKind::Aniso,
            _ => return Err(Error::Parameter(format!("unknown preconditioner '{s}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecondKind::Standard => "standard",
            PrecondKind::Sum => "sum",
            PrecondKind::Coarse => "coarse",
            PrecondKind::VarW => "varw",
            PrecondKind::Aniso => "aniso",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerSpec {
    pub kind: PrecondKind,
    pub alpha: f64,
    pub alpha_long: f64,
    pub alpha_short: f64,
    /// Constant width for `Sum`/`Coarse`; the narrowest gap when `None`.
    pub width: Option<f64>,
    /// Coarse column size; `W` when `None`.
    pub coarse_h: Option<f64>,
    /// Use the centroid distance `ℓ_F` instead of `H_F` in the coarse operator.
    pub centroid_distance: bool,
}

impl PreconditionerSpec {
    fn base(kind: PrecondKind, alpha: f64) -> Self {
        PreconditionerSpec {
            kind,
            alpha,
            alpha_long: alpha,
            alpha_short: alpha,
            width: None,
            coarse_h: None,
            centroid_distance: false,
        }
    }

    pub fn standard() -> Self {
        Self::base(PrecondKind::Standard, 1.0)
    }

    pub fn sum(alpha: f64) -> Self {
        Self::base(PrecondKind::Sum, alpha)
    }

    pub fn coarse(alpha: f64) -> Self {
        Self::base(PrecondKind::Coarse, alpha)
    }

    pub fn varw(alpha: f64) -> Self {
        Self::base(PrecondKind::VarW, alpha)
    }

    pub fn aniso(alpha_long: f64, alpha_short: f64) -> Self {
        PreconditionerSpec { alpha_long, alpha_short, ..Self::base(PrecondKind::Aniso, 1.0) }
    }

    /// `α_L = 1/12`, `α_W = (β/12)(L/W)²`.
    pub fn aniso_beta(beta: f64, length: f64, width: f64) -> Self {
        Self::aniso(LUBRICATION_ALPHA, beta / 12.0 * (length / width).powi(2))
    }

    pub fn lubrication(kind: PrecondKind) -> Self {
        Self::base(kind, LUBRICATION_ALPHA)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            PrecondKind::Standard => true,
            PrecondKind::Aniso => self.alpha_long > 0.0 && self.alpha_short > 0.0,
            _ => self.alpha > 0.0,
        };
        if !ok || self.width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::Parameter(format!("nonpositive coefficient in {self:?}")));
        }
        Ok(())
    }
}

/// Pressure Laplacian coefficient: `α W(x)²` or `diag(α_L, α_W) W²`.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Scalar { alpha: f64, width: WidthField },
    Tensor { alpha_long: f64, alpha_short: f64, width: f64 },
}

impl Coefficient {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Coefficient::Scalar { alpha, width } => {
                let w = width.eval(x[0]);
                [alpha * w * w, alpha * w * w]
            }
            Coefficient::Tensor { alpha_long, alpha_short, width } => {
                [alpha_long * width * width, alpha_short * width * width]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Coefficient::Scalar { alpha, width } => *alpha > 0.0 && width.min() > 0.0,
            Coefficient::Tensor { alpha_long, alpha_short, width } => {
                *alpha_long > 0.0 && *alpha_short > 0.0 && *width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("nonpositive Laplacian coefficient {self:?}")))
        }
    }
}

/// Weighted pressure Laplacian on the system's pressure space with weak
/// (penalty) conditions on traction facets. Cell spaces get the two-point
/// jump form `Σ_F k |F|/H_F ⟦p⟧⟦q⟧`; P1 spaces the stiffness matrix. `H_F` is
/// the cell size normal to the face (the edge length for P1 boundary edges).
/// Returns the matrix and whether it is singular (no traction facet).
pub fn assemble_pressure_laplacian(system: &StokesSystem, coeff: &Coefficient) -> Result<(CsrMatrix<f64>, bool)> {
    coeff.validate()?;
    let tags = system.geometry.tags;
    let mut any_neumann = false;
    let k = match &system.layout {
        Layout::Fv(lay) => {
            let g = &lay.grid;
            let np = lay.cells.len();
            let mut t = TripletBuilder::with_capacity(np, np, 5 * np);
            let link = |a: usize, b: usize, v: f64, t: &mut TripletBuilder<f64>| {
                t.push(a, a, v);
                t.push(b, b, v);
                t.push(a, b, -v);
                t.push(b, a, -v);
            };
            for (q, &(i, j)) in lay.cells.iter().enumerate() {
                let c = g.cell_center(i, j);
                if i + 1 < g.nx {
                    if let Some(r) = lay.cell_dof[g.cell_index(i + 1, j)] {
                        let kx = coeff.eval([c[0] + 0.5 * g.hx, c[1]])[0];
                        link(q, r, kx * g.hy / g.hx, &mut t);
                    }
                }
                if j + 1 < g.ny {
                    if let Some(r) = lay.cell_dof[g.cell_index(i, j + 1)] {
                        let ky = coeff.eval([c[0], c[1] + 0.5 * g.hy])[1];
                        link(q, r, ky * g.hx / g.hy, &mut t);
                    }
                }
                let faces = [
                    (Side::Left, i == 0, [c[0] - 0.5 * g.hx, c[1]], 0, g.hy / g.hx),
                    (Side::Right, i + 1 == g.nx, [c[0] + 0.5 * g.hx, c[1]], 0, g.hy / g.hx),
                    (Side::Bottom, j == 0, [c[0], c[1] - 0.5 * g.hy], 1, g.hx / g.hy),
                    (Side::Top, j + 1 == g.ny, [c[0], c[1] + 0.5 * g.hy], 1, g.hx / g.hy),
                ];
                for (side, outer, x, d, ratio) in faces {
                    if outer && tags.get(side) == BoundaryTag::TractionNeumann {
                        any_neumann = true;
                        t.push(q, q, coeff.eval(x)[d] * ratio);
                    }
                }
            }
            t.build()
        }
        Layout::Th(lay) => {
            let mesh = &lay.mesh;
            let stiff = p1_stiffness(mesh, &|x| coeff.eval(x));
            let nv = mesh.vertices.len();
            let mut t = TripletBuilder::with_capacity(nv, nv, 4 * mesh.boundary.len());
            for be in &mesh.boundary {
                if be.tag != BoundaryTag::TractionNeumann {
                    continue;
                }
                any_neumann = true;
                let [a, b] = be.vertices;
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                let d = if matches!(be.side, Side::Left | Side::Right) { 0 } else { 1 };
                let kn = coeff.eval([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])])[d];
                // ∫_e (k/|e|) p q = k/6 [[2, 1], [1, 2]]
                let s = kn / 6.0;
                t.push(a, a, 2.0 * s);
                t.push(b, b, 2.0 * s);
                t.push(a, b, s);
                t.push(b, a, s);
            }
            stiff.add_scaled(1.0, &t.build())?
        }
    };
    Ok((k.into_symmetric(1e-12)?, !any_neumann))
}

/// Coarse jump operator `Σ_F αW²|F|/H_F ⟦p⟧⟦q⟧` plus Neumann-face terms on the
/// partition columns. Returns the matrix and whether it is singular.
pub fn assemble_coarse_laplacian(
    part: &CoarsePartition,
    alpha: f64,
    width: f64,
    centroid_distance: bool,
) -> Result<(CsrMatrix<f64>, bool)> {
    if !(alpha > 0.0 && width > 0.0) {
        return Err(Error::Parameter(format!("nonpositive coarse coefficient α={alpha}, W={width}")));
    }
    let c = alpha * width * width;
    let n = part.num_cells();
    let mut t = TripletBuilder::with_capacity(n, n, 4 * part.faces.len() + part.neumann_faces.len());
    for f in &part.faces {
        let h = if centroid_distance { f.centroid_distance } else { f.diameter };
        let v = c * f.measure / h;
        let (a, b) = f.cells;
        t.push(a, a, v);
        t.push(b, b, v);
        t.push(a, b, -v);
        t.push(b, a, -v);
    }
    for f in &part.neumann_faces {
        let h = if centroid_distance { f.centroid_distance } else { f.diameter };
        t.push(f.cell, f.cell, c * f.measure / h);
    }
    let singular = part.neumann_faces.is_empty();
    Ok((t.build().into_symmetric(1e-12)?, singular))
}

/// Cellwise-mean projection onto a coarse partition.
///
/// `r[i][k] = ∫_{Ω_i} φ_k` so that `Q_H q = M_H⁻¹ r q`; `prolong` interpolates
/// coarse piecewise constants at the fine dofs, weighting a dof whose
/// support straddles a column boundary by the share of its integral.
#[derive(Debug, Clone)]
pub struct CoarseProjection {
    pub r: CsrMatrix<f64>,
    pub mass: Vec<f64>,
    pub prolong: CsrMatrix<f64>,
}

impl CoarseProjection {
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut out = self.r.spmv(q).expect("fine dimension");
        for (o, m) in out.iter_mut().zip(&self.mass) {
            *o /= m;
        }
        out
    }
}

pub fn l2_projection_q_h(system: &StokesSystem, part: &CoarsePartition) -> Result<CoarseProjection> {
    let nc = part.num_cells();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let np = system.np();
    match &system.layout {
        Layout::Fv(lay) => {
            let g = &lay.grid;
            for (q, &(i, _)) in lay.cells.iter().enumerate() {
                let (x0, x1) = (i as f64 * g.hx, (i + 1) as f64 * g.hx);
                let (a, b) = (part.locate(x0 + 1e-12 * g.hx), part.locate(x1 - 1e-12 * g.hx));
                if b > a + 1 {
                    return Err(Error::Projection(format!("fine cell {i} spans more than two coarse cells")));
                }
                for k in a..=b {
                    let c = &part.cells[k];
                    let len = x1.min(c.x1) - x0.max(c.x0);
                    if len > 0.0 {
                        entries.push((k, q, len * g.hy));
                    }
                }
            }
        }
        Layout::Th(lay) => {
            let mesh = &lay.mesh;
            for (t, verts) in mesh.triangles.iter().enumerate() {
                let tg = TriGeom::new(mesh, t);
                let xs = verts.map(|v| mesh.vertices[v][0]);
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let (a, b) = (part.locate(lo + 1e-12), part.locate(hi - 1e-12));
                if a == b {
                    for &v in verts {
                        entries.push((a, v, tg.area / 3.0));
                    }
                    continue;
                }
                if b > a + 1 {
                    return Err(Error::Projection(format!("triangle {t} spans more than two coarse cells")));
                }
                // split by a fine sub-quadrature over the triangle
                const M: usize = 8;
                for s in 0..M {
                    for r in 0..M - s {
                        for flip in [false, true] {
                            if flip && r + s + 1 >= M {
                                continue;
                            }
                            let (l1, l2) = if flip {
                                ((s as f64 + 2.0 / 3.0) / M as f64, (r as f64 + 2.0 / 3.0) / M as f64)
                            } else {
                                ((s as f64 + 1.0 / 3.0) / M as f64, (r as f64 + 1.0 / 3.0) / M as f64)
                            };
                            let l = [1.0 - l1 - l2, l1, l2];
                            let x = tg.point(l);
                            let k = part.locate(x[0]);
                            let w = tg.area / (M * M) as f64;
                            for (m, &v) in verts.iter().enumerate() {
                                entries.push((k, v, w * l[m]));
                            }
                        }
                    }
                }
            }
        }
    }
    let r = CsrMatrix::from_triplets(nc, np, entries);
    let mass: Vec<f64> = part.cells.iter().map(|c| c.volume).collect();
    let rt = r.transpose();
    let mut pe = Vec::with_capacity(rt.nnz());
    for k in 0..np {
        let tot: f64 = rt.row(k).map(|(_, v)| v).sum();
        for (i, v) in rt.row(k) {
            pe.push((k, i, v / tot));
        }
    }
    let prolong = CsrMatrix::from_triplets(np, nc, pe);
    Ok(CoarseProjection { r, mass, prolong })
}

enum MassSolve {
    Diagonal(Vec<f64>),
    Factor(SymFactor<f64>),
}

struct CoarseSolve {
    prolong: CsrMatrix<f64>,
    restrict: CsrMatrix<f64>,
    factor: SymFactor<f64>,
}

/// `diag(N, S)` with `S = M⁻¹ [+ K⁻¹] [+ Π K_H⁻¹ Πᵀ]`.
pub struct BlockPreconditioner {
    pub spec: PreconditionerSpec,
    nu: usize,
    np: usize,
    velocity: SymFactor<f64>,
    mass: MassSolve,
    laplace: Option<SymFactor<f64>>,
    coarse: Option<CoarseSolve>,
}

impl std::fmt::Debug for BlockPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockPreconditioner").field("spec", &self.spec).field("nu", &self.nu).field("np", &self.np).finish()
    }
}

/// Pieces of the pressure block applied to one residual.
#[derive(Debug, Clone)]
pub struct PressureParts {
    pub mass: Vec<f64>,
    pub laplace: Option<Vec<f64>>,
    pub coarse: Option<Vec<f64>>,
}

impl BlockPreconditioner {
    pub fn velocity_dim(&self) -> usize {
        self.nu
    }

    pub fn pressure_dim(&self) -> usize {
        self.np
    }

    pub fn pressure_parts(&self, r: &[f64]) -> PressureParts {
        let mass = match &self.mass {
            MassSolve::Diagonal(d) => r.iter().zip(d).map(|(a, b)| a / b).collect(),
            MassSolve::Factor(f) => f.solve(r),
        };
        let laplace = self.laplace.as_ref().map(|f| f.solve(r));
        let coarse = self.coarse.as_ref().map(|c| {
            let rc = c.restrict.spmv(r).expect("pressure dimension");
            let zc = c.factor.solve(&rc);
            c.prolong.spmv(&zc).expect("coarse dimension")
        });
        PressureParts { mass, laplace, coarse }
    }

    pub fn apply_velocity(&self, r: &[f64]) -> Vec<f64> {
        self.velocity.solve(r)
    }

    pub fn apply_pressure(&self, r: &[f64]) -> Vec<f64> {
        let parts = self.pressure_parts(r);
        let mut out = parts.mass;
        for extra in [parts.laplace, parts.coarse].into_iter().flatten() {
            for (o, e) in out.iter_mut().zip(extra) {
                *o += e;
            }
        }
        out
    }

    /// `min ⟨Br, r⟩/⟨r, r⟩` over seeded Gaussian probes.
    pub fn spd_probe(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.nu + self.np;
        let mut worst = f64::INFINITY;
        for _ in 0..probes {
            let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let br = self.apply(&r);
            let rr: f64 = r.iter().map(|v| v * v).sum();
            let q: f64 = r.iter().zip(&br).map(|(a, b)| a * b).sum();
            worst = worst.min(q / rr);
        }
        worst
    }
}

impl LinearMap<f64> for BlockPreconditioner {
    fn nrows(&self) -> usize {
        self.nu + self.np
    }

    fn ncols(&self) -> usize {
        self.nu + self.np
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (xu, xp) = x.split_at(self.nu);
        let (yu, yp) = y.split_at_mut(self.nu);
        self.velocity.solve_into(xu, yu);
        yp.copy_from_slice(&self.apply_pressure(xp));
    }

    fn kernel(&self) -> Vec<Vec<f64>> {
        let n = self.nu + self.np;
        self.velocity
            .nullspace()
            .iter()
            .map(|v| {
                let mut full = vec![0.0; n];
                full[..self.nu].copy_from_slice(v);
                full
            })
            .collect()
    }
}

fn constant_basis(n: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / (n as f64).sqrt(); n]]
}

/// Velocity Laplacian factor, deflated by the translation kernel if needed.
pub fn velocity_factor(system: &StokesSystem) -> Result<SymFactor<f64>> {
    let ns = if system.singular_velocity { Some(system.velocity_kernel.as_slice()) } else { None };
    factor_spd(&system.a, ns)
}

pub fn make_preconditioner(
    spec: &PreconditionerSpec,
    system: &StokesSystem,
    part: Option<&CoarsePartition>,
) -> Result<BlockPreconditioner> {
    spec.validate()?;
    let velocity = velocity_factor(system)?;
    let np = system.np();
    let mass = match &system.layout {
        Layout::Fv(_) => MassSolve::Diagonal(system.mp.diagonal()),
        Layout::Th(_) => MassSolve::Factor(factor_spd(&system.mp, None)?),
    };
    let geom = &system.geometry;
    let const_width = spec.width.unwrap_or_else(|| geom.min_width());
    let laplace_coeff = match spec.kind {
        PrecondKind::Standard | PrecondKind::Coarse => None,
        PrecondKind::Sum => Some(Coefficient::Scalar { alpha: spec.alpha, width: WidthField::Constant(const_width) }),
        PrecondKind::VarW => Some(Coefficient::Scalar { alpha: spec.alpha, width: width_field(geom) }),
        PrecondKind::Aniso => Some(Coefficient::Tensor {
            alpha_long: spec.alpha_long,
            alpha_short: spec.alpha_short,
            width: spec.width.unwrap_or(geom.width),
        }),
    };
    let laplace = match laplace_coeff {
        Some(c) => {
            let (k, singular) = assemble_pressure_laplacian(system, &c)?;
            let basis = constant_basis(np);
            Some(factor_spd(&k, singular.then_some(basis.as_slice()))?)
        }
        None => None,
    };
    let coarse = if spec.kind == PrecondKind::Coarse {
        let owned;
        let part = match part {
            Some(p) => p,
            None => {
                owned = build_coarse_partition(geom, spec.coarse_h.unwrap_or_else(|| default_target_h(geom)))?;
                &owned
            }
        };
        let (kh, singular) = assemble_coarse_laplacian(part, spec.alpha, const_width, spec.centroid_distance)?;
        let basis = constant_basis(part.num_cells());
        let factor = factor_spd(&kh, singular.then_some(basis.as_slice()))?;
        let proj = l2_projection_q_h(system, part)?;
        Some(CoarseSolve { restrict: proj.prolong.transpose(), prolong: proj.prolong, factor })
    } else {
        None
    };
    let pc = BlockPreconditioner { spec: *spec, nu: system.nu(), np, velocity, mass, laplace, coarse };
    let probe = pc.spd_probe(10, 0x5bd1e995);
    if !(probe > 0.0) {
        return Err(Error::IndefinitePreconditioner(probe));
    }
    Ok(pc)
}

/// MINRES on the assembled system with `x0 = 0`.
pub fn solve_system(
    system: &StokesSystem,
    pc: &BlockPreconditioner,
    opts: &MinresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let op = system.operator()?;
    minres(&op, pc, &system.rhs(), opts)
}

/// `α = |∫_S u| / (W² |S|)` where `u'' = 1` on `(0, W)`, `u = 0` at both ends,
/// from a second-order finite-difference solve with `n` intervals.
pub fn cross_section_prefactor(width: f64, n: usize) -> Result<f64> {
    if n < 2 || !(width > 0.0) {
        return Err(Error::Parameter(format!("need n >= 2 and W > 0, got n={n}, W={width}")));
    }
    let h = width / n as f64;
    let m = n - 1;
    // Thomas algorithm for (u_{i-1} - 2u_i + u_{i+1})/h² = 1
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        let (a, b, cc) = (1.0, -2.0, 1.0);
        let rhs = h * h;
        if i == 0 {
            c[i] = cc / b;
            d[i] = rhs / b;
        } else {
            let den = b - a * c[i - 1];
            c[i] = cc / den;
            d[i] = (rhs - a * d[i - 1]) / den;
        }
    }
    let mut u = vec![0.0; m];
    for i in (0..m).rev() {
        u[i] = d[i] - if i + 1 < m { c[i] * u[i + 1] } else { 0.0 };
    }
    let integral: f64 = u.iter().sum::<f64>() * h;
    Ok(integral.abs() / (width * width * width))
}
