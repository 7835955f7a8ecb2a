//! Staggered-grid (MAC) finite-volume discretization of the Stokes system.
//!
//! Momentum equations are integrated over the staggered control volumes, so
//! `A` is symmetric and the pressure gradient is exactly `Bᵀ`. Velocity slots
//! on traction boundaries stay unknown with half control volumes; slots on
//! Dirichlet and free-slip boundaries carry the prescribed normal value.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, FacePosition, Side, StaggeredGrid};
use crate::mms::ProblemData;
use crate::sparse::{CsrMatrix, TripletBuilder};
pub use crate::system::Slot;
use crate::system::{Backend, Layout, StokesSystem};

#[derive(Debug, Clone)]
pub struct FvLayout {
    pub grid: Arc<StaggeredGrid>,
    /// x-velocity slots, index `j (nx + 1) + i`.
    pub u_slots: Vec<Slot>,
    /// y-velocity slots, index `j nx + i`.
    pub v_slots: Vec<Slot>,
    /// Cell `(i, j)` of each pressure unknown.
    pub cells: Vec<(usize, usize)>,
    pub cell_dof: Vec<Option<usize>>,
}

/// Component-agnostic view of the staggered layout: for velocity component
/// `c`, slots are indexed by the normal index `a in 0..=n[c]` and the
/// tangential index `b in 0..n[1-c]`.
struct View<'g> {
    grid: &'g StaggeredGrid,
    n: [usize; 2],
    h: [f64; 2],
}

impl<'g> View<'g> {
    fn new(grid: &'g StaggeredGrid) -> Self {
        View { grid, n: [grid.nx, grid.ny], h: [grid.hx, grid.hy] }
    }

    fn ij(&self, c: usize, a: usize, b: usize) -> (usize, usize) {
        if c == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn slot_index(&self, c: usize, a: usize, b: usize) -> usize {
        let (i, j) = self.ij(c, a, b);
        if c == 0 {
            j * (self.n[0] + 1) + i
        } else {
            j * self.n[0] + i
        }
    }

    fn position(&self, c: usize, a: usize, b: usize) -> FacePosition {
        let (i, j) = self.ij(c, a, b);
        if c == 0 {
            self.grid.u_face(i, j)
        } else {
            self.grid.v_face(i, j)
        }
    }

    fn location(&self, c: usize, a: usize, b: usize) -> [f64; 2] {
        let (i, j) = self.ij(c, a, b);
        if c == 0 {
            self.grid.u_location(i, j)
        } else {
            self.grid.v_location(i, j)
        }
    }

    /// Cell between normal slots `a` and `a + 1` at tangential index `b`.
    fn cell_active(&self, c: usize, a: isize, b: usize) -> bool {
        let (i, j) = if c == 0 { (a, b as isize) } else { (b as isize, a) };
        self.grid.active_at(i, j)
    }

    /// Boundary side crossed when leaving along the tangential direction.
    fn tangential_side(&self, c: usize, upward: bool) -> Side {
        match (c, upward) {
            (0, false) => Side::Bottom,
            (0, true) => Side::Top,
            (_, false) => Side::Left,
            (_, true) => Side::Right,
        }
    }

    fn normal_side(&self, c: usize, upward: bool) -> Side {
        self.tangential_side(1 - c, upward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceSampling {
    /// Source evaluated at the velocity slot.
    Slot,
    /// Source evaluated at the centroid of the (possibly halved) control volume.
    Centroid,
}

#[derive(Debug, Clone, Copy)]
pub struct FvOptions {
    pub force_sampling: ForceSampling,
}

impl Default for FvOptions {
    fn default() -> Self {
        FvOptions { force_sampling: ForceSampling::Slot }
    }
}

pub fn assemble_fv(grid: &StaggeredGrid, data: &ProblemData) -> Result<StokesSystem> {
    assemble_fv_with(grid, data, &FvOptions::default())
}

pub fn assemble_fv_with(grid: &StaggeredGrid, data: &ProblemData, opts: &FvOptions) -> Result<StokesSystem> {
    let view = View::new(grid);
    let geom = &grid.geometry;
    let mut slots: [Vec<Slot>; 2] = [vec![Slot::Absent; grid.num_u_slots()], vec![Slot::Absent; grid.num_v_slots()]];
    let mut velocity_dofs: Vec<(usize, [f64; 2])> = Vec::new();
    let mut dof_info: Vec<(usize, usize, usize)> = Vec::new();

    for c in 0..2 {
        for b in 0..view.n[1 - c] {
            for a in 0..=view.n[c] {
                let loc = view.location(c, a, b);
                let slot = match view.position(c, a, b) {
                    FacePosition::Interior | FacePosition::Boundary(_, BoundaryTag::TractionNeumann) => {
                        velocity_dofs.push((c, loc));
                        dof_info.push((c, a, b));
                        Slot::Unknown(velocity_dofs.len() - 1)
                    }
                    FacePosition::Boundary(_, BoundaryTag::DirichletNoSlip) | FacePosition::MaskWall => Slot::Known(0.0),
                    FacePosition::Boundary(_, BoundaryTag::DirichletData | BoundaryTag::FreeSlip) => {
                        Slot::Known((data.velocity)(loc)[c])
                    }
                    FacePosition::Absent => Slot::Absent,
                };
                slots[c][view.slot_index(c, a, b)] = slot;
            }
        }
    }

    let nu = velocity_dofs.len();
    let mut at = TripletBuilder::with_capacity(nu, nu, 5 * nu);
    let mut rhs_u = vec![0.0; nu];

    for (row, &(c, a, b)) in dof_info.iter().enumerate() {
        let loc = view.location(c, a, b);
        let hn = view.h[c];
        let ht = view.h[1 - c];
        let on_boundary = matches!(view.position(c, a, b), FacePosition::Boundary(..));
        let ext = if on_boundary { 0.5 * hn } else { hn };
        let mut diag = 0.0;

        // normal direction: fluxes through the cell centers on either side
        for up in [false, true] {
            let cell_a = if up { a as isize } else { a as isize - 1 };
            if !view.cell_active(c, cell_a, b) {
                let side = view.normal_side(c, up);
                let t = (data.traction)(loc, side.normal());
                rhs_u[row] += ht * t[c];
                continue;
            }
            let na = if up { a + 1 } else { a - 1 };
            let k = ht / hn;
            diag += k;
            match slots[c][view.slot_index(c, na, b)] {
                Slot::Unknown(j) => at.push(row, j, -k),
                Slot::Known(v) => rhs_u[row] += k * v,
                Slot::Absent => return Err(Error::Geometry(format!("dangling velocity slot near {loc:?}"))),
            }
        }

        // tangential direction
        for up in [false, true] {
            let k = ext / ht;
            let nb = if up { b as isize + 1 } else { b as isize - 1 };
            if nb < 0 || nb as usize >= view.n[1 - c] {
                let side = view.tangential_side(c, up);
                let mut wall = loc;
                wall[1 - c] = if up { view.n[1 - c] as f64 * ht } else { 0.0 };
                match geom.tags.get(side) {
                    BoundaryTag::DirichletNoSlip => diag += 2.0 * k,
                    BoundaryTag::DirichletData => {
                        diag += 2.0 * k;
                        rhs_u[row] += 2.0 * k * (data.velocity)(wall)[c];
                    }
                    BoundaryTag::FreeSlip => rhs_u[row] += ext * (data.tangential_stress)(wall, side.normal())[c],
                    BoundaryTag::TractionNeumann => rhs_u[row] += ext * (data.traction)(wall, side.normal())[c],
                }
                continue;
            }
            match slots[c][view.slot_index(c, a, nb as usize)] {
                Slot::Unknown(j) => {
                    diag += k;
                    at.push(row, j, -k);
                }
                Slot::Known(v) => {
                    diag += k;
                    rhs_u[row] += k * v;
                }
                // both cells beyond are masked: no-slip wall half way
                Slot::Absent => diag += 2.0 * k,
            }
        }
        at.push(row, row, diag);

        let mut xf = loc;
        if on_boundary && opts.force_sampling == ForceSampling::Centroid {
            xf[c] += if a == 0 { 0.25 * hn } else { -0.25 * hn };
        }
        rhs_u[row] += (data.body_force)(xf)[c] * ext * ht;
    }
    let a_mat = at.build().into_symmetric(1e-12)?;

    // divergence
    let mut cells = Vec::new();
    let mut cell_dof = vec![None; grid.num_cells()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_active(i, j) {
                cell_dof[grid.cell_index(i, j)] = Some(cells.len());
                cells.push((i, j));
            }
        }
    }
    let np = cells.len();
    let mut bt = TripletBuilder::with_capacity(np, nu, 4 * np);
    let mut rhs_p = vec![0.0; np];
    for (q, &(i, j)) in cells.iter().enumerate() {
        for c in 0..2 {
            let (a, b) = if c == 0 { (i, j) } else { (j, i) };
            let len = view.h[1 - c];
            for (na, sign) in [(a, -1.0), (a + 1, 1.0)] {
                match slots[c][view.slot_index(c, na, b)] {
                    Slot::Unknown(d) => bt.push(q, d, sign * len),
                    Slot::Known(v) => rhs_p[q] -= sign * len * v,
                    Slot::Absent => unreachable!("active cell with absent face"),
                }
            }
        }
    }
    let b_mat = bt.build();
    let mp = CsrMatrix::from_diagonal(&vec![grid.cell_area(); np]);
    let pressure_points = cells.iter().map(|&(i, j)| grid.cell_center(i, j)).collect();

    let velocity_kernel = translation_kernel(&a_mat, &velocity_dofs);
    let singular_velocity = !velocity_kernel.is_empty();
    let layout = FvLayout { grid: Arc::new(grid.clone()), u_slots: slots[0].clone(), v_slots: slots[1].clone(), cells, cell_dof };
    Ok(StokesSystem {
        backend: Backend::Fv,
        geometry: geom.clone(),
        a: a_mat,
        b: b_mat,
        mp,
        rhs_u,
        rhs_p,
        velocity_dofs,
        pressure_points,
        singular_pressure: geom.singular_pressure(),
        singular_velocity,
        velocity_kernel,
        layout: Layout::Fv(layout),
    })
}

/// Constant translations `e_c` that `A` annihilates.
pub(crate) fn translation_kernel(a: &CsrMatrix<f64>, dofs: &[(usize, [f64; 2])]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for c in 0..2 {
        let count = dofs.iter().filter(|d| d.0 == c).count();
        if count == 0 {
            continue;
        }
        let s = 1.0 / (count as f64).sqrt();
        let e: Vec<f64> = dofs.iter().map(|d| if d.0 == c { s } else { 0.0 }).collect();
        let ae = a.spmv(&e).expect("square");
        let scale = a.max_abs();
        if ae.iter().all(|v| v.abs() <= 1e-10 * scale) {
            out.push(e);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvErrors {
    pub p: f64,
    pub ux: f64,
    pub uy: f64,
}

impl FvErrors {
    /// Root-mean-square form: each norm divided by `sqrt(|Ω|)`.
    pub fn per_unit_area(&self, area: f64) -> FvErrors {
        let s = area.sqrt();
        FvErrors { p: self.p / s, ux: self.ux / s, uy: self.uy / s }
    }
}

impl FvLayout {
    fn slot_value(&self, c: usize, idx: usize, u: &[f64]) -> Option<f64> {
        let s = if c == 0 { self.u_slots[idx] } else { self.v_slots[idx] };
        match s {
            Slot::Unknown(d) => Some(u[d]),
            Slot::Known(v) => Some(v),
            Slot::Absent => None,
        }
    }

    /// Velocity interpolated to the center of active cell `(i, j)`.
    pub fn cell_velocity(&self, i: usize, j: usize, u: &[f64]) -> [f64; 2] {
        let g = &self.grid;
        let ux = 0.5
            * (self.slot_value(0, j * (g.nx + 1) + i, u).unwrap_or(0.0)
                + self.slot_value(0, j * (g.nx + 1) + i + 1, u).unwrap_or(0.0));
        let uy = 0.5
            * (self.slot_value(1, j * g.nx + i, u).unwrap_or(0.0) + self.slot_value(1, (j + 1) * g.nx + i, u).unwrap_or(0.0));
        [ux, uy]
    }
}

/// Midpoint-rule `L²` errors with one quadrature node per cell center;
/// velocities are averaged from the two faces of each cell.
pub fn fv_error_norms(
    system: &StokesSystem,
    x: &[f64],
    exact: &dyn Fn([f64; 2]) -> ([f64; 2], f64),
) -> Result<FvErrors> {
    let Layout::Fv(layout) = &system.layout else {
        return Err(Error::Unsupported("finite-volume error norms on a finite-element system".into()));
    };
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), got: x.len() });
    }
    let (u, p) = system.split(x);
    let area = layout.grid.cell_area();
    let exact_cells: Vec<([f64; 2], f64)> = system.pressure_points.iter().map(|&pt| exact(pt)).collect();
    // pressure is only defined up to a constant without traction facets
    let shift = if system.singular_pressure {
        exact_cells.iter().zip(p).map(|(e, ph)| e.1 - ph).sum::<f64>() / p.len() as f64
    } else {
        0.0
    };
    let (mut ep, mut ex, mut ey) = (0.0, 0.0, 0.0);
    for (q, &(i, j)) in layout.cells.iter().enumerate() {
        let (ue, pe) = exact_cells[q];
        let uh = layout.cell_velocity(i, j, u);
        ep += (p[q] + shift - pe).powi(2);
        ex += (uh[0] - ue[0]).powi(2);
        ey += (uh[1] - ue[1]).powi(2);
    }
    Ok(FvErrors { p: (ep * area).sqrt(), ux: (ex * area).sqrt(), uy: (ey * area).sqrt() })
}

/// Writes `x,y,value` rows for the pressure and the cell-centered velocity.
pub fn write_fv_csv<W: Write>(system: &StokesSystem, x: &[f64], mut w: W) -> Result<()> {
    let Layout::Fv(layout) = &system.layout else {
        return Err(Error::Unsupported("not a finite-volume system".into()));
    };
    let (u, p) = system.split(x);
    writeln!(w, "x,y,p,ux,uy")?;
    for (q, &(i, j)) in layout.cells.iter().enumerate() {
        let c = layout.grid.cell_center(i, j);
        let v = layout.cell_velocity(i, j, u);
        writeln!(w, "{},{},{},{},{}", c[0], c[1], p[q], v[0], v[1])?;
    }
    Ok(())
}
