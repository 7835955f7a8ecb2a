//! Discrete pressure norms on slender channels: the sum norm
//! `‖q‖_{L²+WH¹}`, the inf-sup norm `‖q‖_*`, the coarse seminorm and the
//! diagnostics that compare them as the channel gets longer.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::disc_fv::assemble_fv;
use crate::disc_th::TriGeom;
use crate::error::{Error, Result};
use crate::geometry::{
    build_coarse_partition, build_staggered_grid, BcPreset, BoundaryTag, ChannelGeometry, CoarsePartition, Side,
    WidthField,
};
use crate::krylov::DENSE_CAP;
use crate::mms::ProblemData;
use crate::precond::{assemble_coarse_laplacian, assemble_pressure_laplacian, l2_projection_q_h, velocity_factor};
use crate::precond::{Coefficient, CoarseProjection};
use crate::scalar::dot;
use crate::sparse::{factor_spd, CsrMatrix, SymFactor};
use crate::system::{Layout, StokesSystem};

/// Factored operators for repeated norm evaluations on one system.
pub struct NormContext<'s> {
    system: &'s StokesSystem,
    velocity: SymFactor<f64>,
    /// `M + K` with `K` the `W²`-weighted pressure Laplacian.
    mass_plus_k: SymFactor<f64>,
}

impl<'s> NormContext<'s> {
    pub fn new(system: &'s StokesSystem, width: &WidthField) -> Result<Self> {
        let velocity = velocity_factor(system)?;
        let coeff = Coefficient::Scalar { alpha: 1.0, width: width.clone() };
        let (k, _) = assemble_pressure_laplacian(system, &coeff)?;
        let mass_plus_k = factor_spd(&system.mp.add_scaled(1.0, &k)?, None)?;
        Ok(NormContext { system, velocity, mass_plus_k })
    }

    pub fn system(&self) -> &StokesSystem {
        self.system
    }

    pub fn l2_norm(&self, q: &[f64]) -> f64 {
        l2_norm(self.system, q)
    }

    /// `sqrt(qᵀMq − qᵀM(M+K)⁻¹Mq)`: the K-functional with its exact
    /// minimizer `q̃ = (M+K)⁻¹Mq`.
    pub fn sum_norm(&self, q: &[f64]) -> f64 {
        let q = self.admissible(q);
        let mq = self.system.mp.spmv(&q).expect("pressure dimension");
        let t = self.mass_plus_k.solve(&mq);
        (dot(&q, &mq) - dot(&mq, &t)).max(0.0).sqrt()
    }

    /// `sqrt(qᵀ B A⁻¹ Bᵀ q)`, with the pseudoinverse of `A` when the velocity
    /// space contains a translation.
    pub fn schur_norm(&self, q: &[f64]) -> f64 {
        let btq = self.system.b.mul_transpose_vec(q);
        let y = self.velocity.solve(&btq);
        dot(&btq, &y).max(0.0).sqrt()
    }

    fn admissible(&self, q: &[f64]) -> Vec<f64> {
        let mut q = q.to_vec();
        if self.system.singular_pressure {
            remove_mean(self.system, &mut q);
        }
        q
    }
}

pub fn l2_norm(system: &StokesSystem, q: &[f64]) -> f64 {
    let mq = system.mp.spmv(q).expect("pressure dimension");
    dot(q, &mq).max(0.0).sqrt()
}

/// Subtracts the `L²` mean.
pub fn remove_mean(system: &StokesSystem, q: &mut [f64]) {
    let ones = vec![1.0; q.len()];
    let m1 = system.mp.spmv(&ones).expect("pressure dimension");
    let mean = dot(q, &m1) / m1.iter().sum::<f64>();
    q.iter_mut().for_each(|v| *v -= mean);
}

pub fn sum_norm(system: &StokesSystem, q: &[f64], width: &WidthField) -> Result<f64> {
    Ok(NormContext::new(system, width)?.sum_norm(q))
}

pub fn schur_norm(system: &StokesSystem, q: &[f64]) -> Result<f64> {
    let f = velocity_factor(system)?;
    let btq = system.b.mul_transpose_vec(q);
    Ok(dot(&btq, &f.solve(&btq)).max(0.0).sqrt())
}

/// Dense `S = B A⁻¹ Bᵀ` (one velocity solve per pressure unknown).
pub fn dense_schur(system: &StokesSystem) -> Result<DMatrix<f64>> {
    let np = system.np();
    if np > DENSE_CAP {
        return Err(Error::SizeCap { n: np, cap: DENSE_CAP });
    }
    let f = velocity_factor(system)?;
    let bt = system.b.transpose();
    let mut s = DMatrix::zeros(np, np);
    let mut e = vec![0.0; np];
    for q in 0..np {
        e[q] = 1.0;
        let col = f.solve(&bt.spmv(&e)?);
        e[q] = 0.0;
        let bcol = system.b.spmv(&col)?;
        for (r, v) in bcol.iter().enumerate() {
            s[(r, q)] = *v;
        }
    }
    Ok((&s + s.transpose()) * 0.5)
}

/// `β = sqrt(λ_min)` of the pencil `(B A⁻¹ Bᵀ, M_p)`, skipping the constant
/// mode when the pressure is only determined up to a constant.
pub fn infsup_constant(system: &StokesSystem) -> Result<f64> {
    let s = dense_schur(system)?;
    let np = system.np();
    let m = dense(&system.mp);
    let l = m.cholesky().ok_or_else(|| Error::Eigen("pressure mass matrix is not SPD".into()))?.l();
    let li = l.try_inverse().ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = &li * s * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let skip = usize::from(system.singular_pressure);
    if ev.len() <= skip {
        return Err(Error::Eigen(format!("no admissible pressure modes (np = {np})")));
    }
    let top = ev[ev.len() - 1].abs().max(1.0);
    if skip == 1 && ev[0].abs() > 1e-8 * top {
        return Err(Error::Eigen(format!("expected a zero mode for constants, smallest eigenvalue {:e}", ev[0])));
    }
    let lo = ev[skip];
    if !(lo > 0.0) {
        return Err(Error::Eigen(format!("nonpositive Schur eigenvalue {lo:e}")));
    }
    Ok(lo.sqrt())
}

fn dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| rows[i][j])
}

/// `|q_H|_{1,H}`: face jumps over `H_F` plus Neumann-face values.
pub fn coarse_seminorm(q_h: &[f64], part: &CoarsePartition) -> Result<f64> {
    if q_h.len() != part.num_cells() {
        return Err(Error::DimensionMismatch { expected: part.num_cells(), got: q_h.len() });
    }
    let (k, _) = assemble_coarse_laplacian(part, 1.0, 1.0, false)?;
    Ok(dot(q_h, &k.spmv(q_h)?).max(0.0).sqrt())
}

/// `(∫ q, ∫ q²)` over the union of the given coarse columns.
fn column_moments(system: &StokesSystem, part: &CoarsePartition, cols: &[usize], q: &[f64]) -> Result<(f64, f64)> {
    let (mut s1, mut s2) = (0.0, 0.0);
    match &system.layout {
        Layout::Fv(lay) => {
            let g = &lay.grid;
            for (k, &(i, _)) in lay.cells.iter().enumerate() {
                let (x0, x1) = (i as f64 * g.hx, (i + 1) as f64 * g.hx);
                let inside: f64 = cols
                    .iter()
                    .map(|&c| (x1.min(part.cells[c].x1) - x0.max(part.cells[c].x0)).max(0.0))
                    .sum();
                let area = inside * g.hy;
                s1 += area * q[k];
                s2 += area * q[k] * q[k];
            }
        }
        Layout::Th(lay) => {
            let mesh = &lay.mesh;
            for (t, v) in mesh.triangles.iter().enumerate() {
                let tg = TriGeom::new(mesh, t);
                let xs = v.map(|i| mesh.vertices[i][0]);
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let (a, b) = (part.locate(lo + 1e-12), part.locate(hi - 1e-12));
                if a != b {
                    return Err(Error::Projection(format!("triangle {t} straddles a coarse column boundary")));
                }
                if !cols.contains(&a) {
                    continue;
                }
                let qv = v.map(|i| q[i]);
                s1 += tg.area * (qv[0] + qv[1] + qv[2]) / 3.0;
                // exact P1 mass: |T|/12 (Σ q_i² + (Σ q_i)²)
                let sum = qv[0] + qv[1] + qv[2];
                let sq = qv[0] * qv[0] + qv[1] * qv[1] + qv[2] * qv[2];
                s2 += tg.area / 12.0 * (sq + sum * sum);
            }
        }
    }
    Ok((s1, s2))
}

/// Both sides of the jump identity on the adjacent pair `(a, b)`:
/// `lhs = ‖q − q̄‖²` over `Ω_a ∪ Ω_b` and `rhs = ν_a ν_b / (2 ν̄) ⟦Q_H q⟧²`
/// with `ν̄` the mean volume. `lhs ≥ rhs`, with equality iff `q` is constant
/// on each of the two cells.
pub fn jump_identity_check(
    system: &StokesSystem,
    part: &CoarsePartition,
    q: &[f64],
    a: usize,
    b: usize,
) -> Result<(f64, f64)> {
    let adjacent = part.faces.iter().any(|f| f.cells == (a.min(b), a.max(b)));
    if !adjacent {
        return Err(Error::Parameter(format!("coarse cells {a} and {b} are not adjacent")));
    }
    let (ia, _) = column_moments(system, part, &[a], q)?;
    let (ib, _) = column_moments(system, part, &[b], q)?;
    let (total, sq) = column_moments(system, part, &[a, b], q)?;
    let (va, vb) = (part.cells[a].volume, part.cells[b].volume);
    let nu = va + vb;
    let lhs = (sq - total * total / nu).max(0.0);
    let jump = ia / va - ib / vb;
    let rhs = va * vb / nu * jump * jump;
    Ok((lhs, rhs))
}

/// Lemma-type coarse quantity `sqrt(‖q − Q_H q‖² + H² |Q_H q|²_{1,H})`.
pub fn coarse_split_norm(system: &StokesSystem, proj: &CoarseProjection, part: &CoarsePartition, q: &[f64]) -> Result<f64> {
    let qh = proj.apply(q);
    let l2sq = l2_norm(system, q).powi(2);
    let coarse_sq: f64 = qh.iter().zip(&proj.mass).map(|(c, m)| m * c * c).sum();
    let fluct = (l2sq - coarse_sq).max(0.0);
    let h = coarse_size(part);
    Ok((fluct + h * h * coarse_seminorm(&qh, part)?.powi(2)).sqrt())
}

fn coarse_size(part: &CoarsePartition) -> f64 {
    part.cells.iter().map(|c| (c.x1 - c.x0).max(part.width)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormSample {
    pub l2: f64,
    pub sum: f64,
    pub schur: f64,
    pub coarse_semi: f64,
    pub fluctuation: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormRow {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "W")]
    pub width: f64,
    pub h: f64,
    pub r_sum_min: f64,
    pub r_sum_max: f64,
    #[serde(rename = "r_L2_max")]
    pub r_l2_max: f64,
    pub lemma45_min: f64,
    pub lemma45_max: f64,
    pub seed: u64,
}

impl NormRow {
    /// Spread `max/min` of `‖q‖_* / ‖q‖_{L²+WH¹}` over the samples.
    pub fn sum_spread(&self) -> f64 {
        self.r_sum_max / self.r_sum_min
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
    /// Per-length sample values, in row order.
    pub samples: Vec<Vec<NormSample>>,
}

impl NormReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L,W,h,r_sum_min,r_sum_max,r_L2_max,lemma45_min,lemma45_max,seed")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                r.length, r.width, r.h, r.r_sum_min, r.r_sum_max, r.r_l2_max, r.lemma45_min, r.lemma45_max, r.seed
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NormScanConfig {
    pub lengths: Vec<f64>,
    pub width: f64,
    /// FV grid spacing, fixed across lengths.
    pub h: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for NormScanConfig {
    fn default() -> Self {
        NormScanConfig { lengths: vec![2.0, 4.0, 8.0, 16.0, 32.0], width: 1.0, h: 0.125, samples: 50, seed: 2024 }
    }
}

/// Seed for the `k`-th length of a scan.
pub fn derived_seed(master: u64, k: usize) -> u64 {
    master ^ (k as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Sample set: seeded Gaussian cell values (zero mean) plus `cos(πx/L)`.
pub fn norm_samples(system: &StokesSystem, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = system.np();
    let len = system.geometry.length;
    let mut out = Vec::with_capacity(samples + 1);
    for _ in 0..samples {
        let mut q: Vec<f64> = (0..np).map(|_| StandardNormal.sample(&mut rng)).collect();
        remove_mean(system, &mut q);
        out.push(q);
    }
    let mut cos: Vec<f64> = system
        .pressure_points
        .iter()
        .map(|p| (std::f64::consts::PI * p[0] / len).cos())
        .collect();
    remove_mean(system, &mut cos);
    out.push(cos);
    out
}

/// Norm ratios on one system: rows of the scan table.
pub fn norm_row(system: &StokesSystem, part: &CoarsePartition, h: f64, samples: &[Vec<f64>], seed: u64) -> Result<(NormRow, Vec<NormSample>)> {
    let geom = &system.geometry;
    let ctx = NormContext::new(system, &WidthField::Constant(geom.width))?;
    let proj = l2_projection_q_h(system, part)?;
    let mut recs = Vec::with_capacity(samples.len());
    let mut row = NormRow {
        length: geom.length,
        width: geom.width,
        h,
        r_sum_min: f64::INFINITY,
        r_sum_max: 0.0,
        r_l2_max: 0.0,
        lemma45_min: f64::INFINITY,
        lemma45_max: 0.0,
        seed,
    };
    for q in samples {
        let l2 = ctx.l2_norm(q);
        let sum = ctx.sum_norm(q);
        let schur = ctx.schur_norm(q);
        let qh = proj.apply(q);
        let coarse_semi = coarse_seminorm(&qh, part)?;
        let coarse_sq: f64 = qh.iter().zip(&proj.mass).map(|(c, m)| m * c * c).sum();
        let fluctuation = (l2 * l2 - coarse_sq).max(0.0).sqrt();
        let lemma = coarse_split_norm(system, &proj, part, q)?;
        let r_sum = schur / sum;
        row.r_sum_min = row.r_sum_min.min(r_sum);
        row.r_sum_max = row.r_sum_max.max(r_sum);
        row.r_l2_max = row.r_l2_max.max(l2 / schur);
        row.lemma45_min = row.lemma45_min.min(schur / lemma);
        row.lemma45_max = row.lemma45_max.max(schur / lemma);
        recs.push(NormSample { l2, sum, schur, coarse_semi, fluctuation });
    }
    Ok((row, recs))
}

/// All-Dirichlet channels `(0, L) x (0, W)` on a fixed FV grid: how the
/// inf-sup norm compares with the sum norm and with `L²` as `L` grows.
/// The Lemma columns hold `‖q‖_* / sqrt(‖q − Q_H q‖² + H²|Q_H q|²_{1,H})`.
pub fn norm_equivalence_scan(cfg: &NormScanConfig) -> Result<NormReport> {
    let mut report = NormReport::default();
    for (k, &len) in cfg.lengths.iter().enumerate() {
        let geom = ChannelGeometry::with_preset(len, cfg.width, BcPreset::AllDirichlet)?;
        let grid = build_staggered_grid(&geom, cfg.h)?;
        let system = assemble_fv(&grid, &ProblemData::zero())?;
        let part = build_coarse_partition(&geom, cfg.width)?;
        let seed = derived_seed(cfg.seed, k);
        let samples = norm_samples(&system, cfg.samples, seed);
        let (row, recs) = norm_row(&system, &part, cfg.h, &samples, seed)?;
        report.rows.push(row);
        report.samples.push(recs);
    }
    Ok(report)
}

/// Inf-sup norms of `q` on a channel and on `parts` equal sub-channels with
/// no-slip on the cut faces: returns `(Σ_j ‖q‖²_{*,Ω_j}, ‖q‖²_{*,Ω})`. The
/// first never exceeds the second.
pub fn subadditivity_check(
    geom: &ChannelGeometry,
    h: f64,
    parts: usize,
    q: &dyn Fn([f64; 2]) -> f64,
) -> Result<(f64, f64)> {
    if parts == 0 {
        return Err(Error::Parameter("need at least one subdomain".into()));
    }
    if !geom.is_rectangle() {
        return Err(Error::Unsupported("subdomain split of constricted channels".into()));
    }
    let eval = |g: &ChannelGeometry, x0: f64| -> Result<f64> {
        let system = assemble_fv(&build_staggered_grid(g, h)?, &ProblemData::zero())?;
        let qv: Vec<f64> = system.pressure_points.iter().map(|p| q([p[0] + x0, p[1]])).collect();
        Ok(schur_norm(&system, &qv)?.powi(2))
    };
    let whole = eval(geom, 0.0)?;
    let piece = geom.length / parts as f64;
    let mut total = 0.0;
    for j in 0..parts {
        let mut tags = geom.tags;
        if j > 0 {
            tags.set(Side::Left, BoundaryTag::DirichletNoSlip);
        }
        if j + 1 < parts {
            tags.set(Side::Right, BoundaryTag::DirichletNoSlip);
        }
        let sub = ChannelGeometry::new(piece, geom.width, tags)?;
        total += eval(&sub, j as f64 * piece)?;
    }
    Ok((total, whole))
}
