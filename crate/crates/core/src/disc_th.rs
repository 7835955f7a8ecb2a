//! Taylor–Hood `[P2]² x P1` discretization on structured triangulations.
//!
//! Dirichlet components are eliminated and their lifting moved to the right
//! hand side. Free-slip facets fix the normal component and keep the
//! tangential one natural; traction enters as a boundary integral.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use crate::disc_fv::translation_kernel;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, EdgeTable, Side, TriMesh};
use crate::mms::{MmsFields, ProblemData};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::system::{Backend, Layout, Slot, StokesSystem};

/// Six-point rule exact to degree 4, as (barycentric, weight) with weights
/// summing to one.
pub(crate) const TRI_QUAD: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445948490915965;
    const B1: f64 = 0.108103018168070;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const B2: f64 = 0.816847572980459;
    const W2: f64 = 0.109951743655322;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

/// Three-point Gauss rule on `[0, 1]`.
const LINE_QUAD: [(f64, f64); 3] = [
    (0.1127016653792583, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.8872983346207417, 5.0 / 18.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    VectorP2,
    ScalarP1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
}

/// Lagrange space on a triangle mesh. Boundary node sets are keyed by the
/// winning tag of each node (Dirichlet over free-slip over traction).
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub coords: Vec<[f64; 2]>,
    pub entity: Vec<Entity>,
    pub boundary: HashMap<BoundaryTag, Vec<usize>>,
}

impl FeSpace {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    /// Scalar dofs; twice the node count for the vector space.
    pub fn num_dofs(&self) -> usize {
        match self.kind {
            SpaceKind::VectorP2 => 2 * self.coords.len(),
            SpaceKind::ScalarP1 => self.coords.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThLayout {
    pub mesh: Arc<TriMesh>,
    pub edges: Arc<EdgeTable>,
    pub velocity: FeSpace,
    pub pressure: FeSpace,
    /// Status of each (node, component) of the velocity space.
    pub slots: Vec<[Slot; 2]>,
}

impl ThLayout {
    /// Global P2 node indices of triangle `t`: three vertices, then the
    /// midpoints of the edges opposite them.
    pub fn p2_nodes(&self, t: usize) -> [usize; 6] {
        p2_nodes(&self.mesh, &self.edges, t)
    }

    /// Full nodal velocity (eliminated values filled in).
    pub fn nodal_velocity(&self, u: &[f64]) -> Vec<[f64; 2]> {
        self.slots
            .iter()
            .map(|s| {
                let g = |sl: Slot| match sl {
                    Slot::Unknown(d) => u[d],
                    Slot::Known(v) => v,
                    Slot::Absent => 0.0,
                };
                [g(s[0]), g(s[1])]
            })
            .collect()
    }
}

fn p2_nodes(mesh: &TriMesh, edges: &EdgeTable, t: usize) -> [usize; 6] {
    let [a, b, c] = mesh.triangles[t];
    let nv = mesh.vertices.len();
    let e = edges.tri_edges[t];
    [a, b, c, nv + e[0], nv + e[1], nv + e[2]]
}

/// Per-triangle geometry: area and the constant barycentric gradients.
pub(crate) struct TriGeom {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
    pub x: [[f64; 2]; 3],
}

impl TriGeom {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let x = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let det = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]);
        let mut grad = [[0.0; 2]; 3];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            grad[k] = [(x[i][1] - x[j][1]) / det, (x[j][0] - x[i][0]) / det];
        }
        TriGeom { area: 0.5 * det.abs(), grad, x }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        [
            l[0] * self.x[0][0] + l[1] * self.x[1][0] + l[2] * self.x[2][0],
            l[0] * self.x[0][1] + l[1] * self.x[1][1] + l[2] * self.x[2][1],
        ]
    }
}

fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

fn p2_grads(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for k in 0..3 {
        let s = 4.0 * l[k] - 1.0;
        out[k] = [s * g[k][0], s * g[k][1]];
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        out[3 + k] = [4.0 * (l[i] * g[j][0] + l[j] * g[i][0]), 4.0 * (l[i] * g[j][1] + l[j] * g[i][1])];
    }
    out
}

fn tag_rank(tag: BoundaryTag) -> u8 {
    match tag {
        BoundaryTag::DirichletNoSlip | BoundaryTag::DirichletData => 3,
        BoundaryTag::FreeSlip => 2,
        BoundaryTag::TractionNeumann => 1,
    }
}

fn build_spaces(mesh: &TriMesh, edges: &EdgeTable) -> Result<(FeSpace, FeSpace, Vec<Vec<(Side, BoundaryTag)>>)> {
    let nv = mesh.vertices.len();
    let mut coords = mesh.vertices.clone();
    let mut entity: Vec<Entity> = (0..nv).map(Entity::Vertex).collect();
    for (e, &[a, b]) in edges.edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        entity.push(Entity::Edge(e));
    }
    let edge_id: HashMap<(usize, usize), usize> = edges.edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
    let mut node_tags: Vec<Vec<(Side, BoundaryTag)>> = vec![Vec::new(); coords.len()];
    for be in &mesh.boundary {
        let [a, b] = be.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let aligned = (pa[0] - pb[0]).abs() < 1e-12 || (pa[1] - pb[1]).abs() < 1e-12;
        if be.tag == BoundaryTag::FreeSlip && !aligned {
            return Err(Error::Unsupported("free slip on a facet that is not axis aligned".into()));
        }
        let e = edge_id[&(a.min(b), a.max(b))];
        for node in [a, b, nv + e] {
            if !node_tags[node].contains(&(be.side, be.tag)) {
                node_tags[node].push((be.side, be.tag));
            }
        }
    }
    let mut boundary: HashMap<BoundaryTag, Vec<usize>> = HashMap::new();
    let mut p_boundary: HashMap<BoundaryTag, Vec<usize>> = HashMap::new();
    for (node, tags) in node_tags.iter().enumerate() {
        if let Some(&(_, tag)) = tags.iter().max_by_key(|(_, t)| tag_rank(*t)) {
            boundary.entry(tag).or_default().push(node);
            if node < nv {
                p_boundary.entry(tag).or_default().push(node);
            }
        }
    }
    let velocity = FeSpace { kind: SpaceKind::VectorP2, coords, entity, boundary };
    let pressure = FeSpace {
        kind: SpaceKind::ScalarP1,
        coords: mesh.vertices.clone(),
        entity: (0..nv).map(Entity::Vertex).collect(),
        boundary: p_boundary,
    };
    Ok((velocity, pressure, node_tags))
}

pub fn assemble_th(mesh: &TriMesh, data: &ProblemData) -> Result<StokesSystem> {
    let edges = mesh.edge_table();
    let (velocity, pressure, node_tags) = build_spaces(mesh, &edges)?;
    let geom = crate::geometry::ChannelGeometry::new(
        mesh.vertices.iter().map(|v| v[0]).fold(0.0, f64::max),
        mesh.vertices.iter().map(|v| v[1]).fold(0.0, f64::max),
        tags_of(mesh),
    )?;

    // classify node components
    let mut slots = vec![[Slot::Absent; 2]; velocity.num_nodes()];
    let mut velocity_dofs = Vec::new();
    for (node, tags) in node_tags.iter().enumerate() {
        let x = velocity.coords[node];
        let mut fixed = [None, None];
        if let Some(&(_, tag)) = tags.iter().filter(|(_, t)| t.is_dirichlet()).max_by_key(|(_, t)| *t == BoundaryTag::DirichletData) {
            let v = if tag == BoundaryTag::DirichletData { (data.velocity)(x) } else { [0.0; 2] };
            fixed = [Some(v[0]), Some(v[1])];
        } else {
            for &(side, tag) in tags {
                if tag == BoundaryTag::FreeSlip {
                    let c = if matches!(side, Side::Left | Side::Right) { 0 } else { 1 };
                    fixed[c] = Some((data.velocity)(x)[c]);
                }
            }
        }
        for c in 0..2 {
            slots[node][c] = match fixed[c] {
                Some(v) => Slot::Known(v),
                None => {
                    velocity_dofs.push((c, x));
                    Slot::Unknown(velocity_dofs.len() - 1)
                }
            };
        }
    }

    let nu = velocity_dofs.len();
    let np = pressure.num_nodes();
    let nt = mesh.triangles.len();
    let mut at = TripletBuilder::with_capacity(nu, nu, 2 * 36 * nt);
    let mut bt = TripletBuilder::with_capacity(np, nu, 36 * nt);
    let mut mt = TripletBuilder::with_capacity(np, np, 9 * nt);
    let mut rhs_u = vec![0.0; nu];
    let mut rhs_p = vec![0.0; np];

    for t in 0..nt {
        let tg = TriGeom::new(mesh, t);
        let nodes = p2_nodes(mesh, &edges, t);
        let verts = mesh.triangles[t];
        let mut k = [[0.0; 6]; 6];
        let mut bl = [[[0.0; 2]; 6]; 3];
        let mut ml = [[0.0; 3]; 3];
        let mut fl = [[0.0; 2]; 6];
        for &(l, w) in &TRI_QUAD {
            let wa = w * tg.area;
            let phi = p2_values(l);
            let dphi = p2_grads(l, &tg.grad);
            let f = (data.body_force)(tg.point(l));
            for i in 0..6 {
                for j in 0..6 {
                    k[i][j] += wa * (dphi[i][0] * dphi[j][0] + dphi[i][1] * dphi[j][1]);
                }
                fl[i][0] += wa * f[0] * phi[i];
                fl[i][1] += wa * f[1] * phi[i];
            }
            for q in 0..3 {
                for i in 0..6 {
                    bl[q][i][0] += wa * l[q] * dphi[i][0];
                    bl[q][i][1] += wa * l[q] * dphi[i][1];
                }
                for r in 0..3 {
                    ml[q][r] += wa * l[q] * l[r];
                }
            }
        }
        for i in 0..6 {
            for c in 0..2 {
                let Slot::Unknown(row) = slots[nodes[i]][c] else { continue };
                rhs_u[row] += fl[i][c];
                for j in 0..6 {
                    match slots[nodes[j]][c] {
                        Slot::Unknown(col) => at.push(row, col, k[i][j]),
                        Slot::Known(v) => rhs_u[row] -= k[i][j] * v,
                        Slot::Absent => {}
                    }
                }
            }
        }
        for q in 0..3 {
            for i in 0..6 {
                for c in 0..2 {
                    match slots[nodes[i]][c] {
                        Slot::Unknown(col) => bt.push(verts[q], col, bl[q][i][c]),
                        Slot::Known(v) => rhs_p[verts[q]] -= bl[q][i][c] * v,
                        Slot::Absent => {}
                    }
                }
            }
            for r in 0..3 {
                mt.push(verts[q], verts[r], ml[q][r]);
            }
        }
    }

    // natural boundary terms
    let nv = mesh.vertices.len();
    let edge_id: HashMap<(usize, usize), usize> = edges.edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
    for be in &mesh.boundary {
        let field = match be.tag {
            BoundaryTag::TractionNeumann => &data.traction,
            BoundaryTag::FreeSlip => &data.tangential_stress,
            _ => continue,
        };
        let [a, b] = be.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let n = be.side.normal();
        let mid = nv + edge_id[&(a.min(b), a.max(b))];
        for &(s, w) in &LINE_QUAD {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let tr = field(x, n);
            let phi = [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)];
            for (node, ph) in [a, b, mid].into_iter().zip(phi) {
                for c in 0..2 {
                    if let Slot::Unknown(row) = slots[node][c] {
                        rhs_u[row] += w * len * tr[c] * ph;
                    }
                }
            }
        }
    }

    let a_mat = at.build().into_symmetric(1e-10)?;
    let b_mat = bt.build();
    let mp = mt.build().into_symmetric(1e-12)?;
    let velocity_kernel = translation_kernel(&a_mat, &velocity_dofs);
    let layout = ThLayout { mesh: Arc::new(mesh.clone()), edges: Arc::new(edges), velocity, pressure, slots };
    Ok(StokesSystem {
        backend: Backend::Th,
        singular_pressure: geom.singular_pressure(),
        singular_velocity: !velocity_kernel.is_empty(),
        geometry: geom,
        a: a_mat,
        b: b_mat,
        mp,
        rhs_u,
        rhs_p,
        velocity_dofs,
        pressure_points: mesh.vertices.clone(),
        velocity_kernel,
        layout: Layout::Th(layout),
    })
}

fn tags_of(mesh: &TriMesh) -> crate::geometry::SideTags {
    let mut tags = crate::geometry::SideTags::uniform(BoundaryTag::DirichletNoSlip);
    for be in &mesh.boundary {
        tags.set(be.side, be.tag);
    }
    tags
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThErrors {
    pub u_h1: f64,
    pub u_l2: f64,
    pub p_l2: f64,
}

/// Full `H¹` velocity error and `L²` pressure error; the pressure is shifted
/// to the exact mean when it is only defined up to a constant.
pub fn th_error_norms(system: &StokesSystem, x: &[f64], exact: &dyn Fn([f64; 2]) -> MmsFields) -> Result<ThErrors> {
    let Layout::Th(layout) = &system.layout else {
        return Err(Error::Unsupported("Taylor-Hood error norms on a finite-volume system".into()));
    };
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), got: x.len() });
    }
    let (u, p) = system.split(x);
    let un = layout.nodal_velocity(u);
    let mesh = &layout.mesh;
    let shift = if system.singular_pressure {
        let (mut de, mut vol) = (0.0, 0.0);
        for t in 0..mesh.triangles.len() {
            let tg = TriGeom::new(mesh, t);
            let verts = mesh.triangles[t];
            for &(l, w) in &TRI_QUAD {
                let ph: f64 = (0..3).map(|k| l[k] * p[verts[k]]).sum();
                de += w * tg.area * (exact(tg.point(l)).p - ph);
                vol += w * tg.area;
            }
        }
        de / vol
    } else {
        0.0
    };
    let (mut e1, mut e0, mut ep) = (0.0, 0.0, 0.0);
    for t in 0..mesh.triangles.len() {
        let tg = TriGeom::new(mesh, t);
        let nodes = layout.p2_nodes(t);
        let verts = mesh.triangles[t];
        for &(l, w) in &TRI_QUAD {
            let wa = w * tg.area;
            let m = exact(tg.point(l));
            let phi = p2_values(l);
            let dphi = p2_grads(l, &tg.grad);
            for c in 0..2 {
                let (mut v, mut g) = (0.0, [0.0; 2]);
                for i in 0..6 {
                    let ui = un[nodes[i]][c];
                    v += ui * phi[i];
                    g[0] += ui * dphi[i][0];
                    g[1] += ui * dphi[i][1];
                }
                e0 += wa * (v - m.u[c]).powi(2);
                e1 += wa * ((g[0] - m.grad_u[c][0]).powi(2) + (g[1] - m.grad_u[c][1]).powi(2));
            }
            let ph: f64 = (0..3).map(|k| l[k] * p[verts[k]]).sum::<f64>() + shift;
            ep += wa * (ph - m.p).powi(2);
        }
    }
    Ok(ThErrors { u_h1: (e0 + e1).sqrt(), u_l2: e0.sqrt(), p_l2: ep.sqrt() })
}

/// Per-vertex pressure as `x,y,p`.
pub fn write_th_pressure_csv<W: Write>(system: &StokesSystem, x: &[f64], mut w: W) -> Result<()> {
    let Layout::Th(layout) = &system.layout else {
        return Err(Error::Unsupported("not a Taylor-Hood system".into()));
    };
    let (_, p) = system.split(x);
    writeln!(w, "x,y,p")?;
    for (c, v) in layout.pressure.coords.iter().zip(p) {
        writeln!(w, "{},{},{}", c[0], c[1], v)?;
    }
    Ok(())
}

/// Per-node velocity as `x,y,ux,uy`, eliminated values included.
pub fn write_th_velocity_csv<W: Write>(system: &StokesSystem, x: &[f64], mut w: W) -> Result<()> {
    let Layout::Th(layout) = &system.layout else {
        return Err(Error::Unsupported("not a Taylor-Hood system".into()));
    };
    let (u, _) = system.split(x);
    writeln!(w, "x,y,ux,uy")?;
    for (c, v) in layout.velocity.coords.iter().zip(layout.nodal_velocity(u)) {
        writeln!(w, "{},{},{},{}", c[0], c[1], v[0], v[1])?;
    }
    Ok(())
}

/// P1 stiffness with a per-triangle tensor coefficient `diag(kx, ky)`.
pub(crate) fn p1_stiffness(mesh: &TriMesh, coeff: &dyn Fn([f64; 2]) -> [f64; 2]) -> CsrMatrix<f64> {
    let nv = mesh.vertices.len();
    let mut t = TripletBuilder::with_capacity(nv, nv, 9 * mesh.triangles.len());
    for (tri, verts) in mesh.triangles.iter().enumerate() {
        let tg = TriGeom::new(mesh, tri);
        let kc = coeff(tg.point([1.0 / 3.0; 3]));
        for i in 0..3 {
            for j in 0..3 {
                let v = tg.area * (kc[0] * tg.grad[i][0] * tg.grad[j][0] + kc[1] * tg.grad[i][1] * tg.grad[j][1]);
                t.push(verts[i], verts[j], v);
            }
        }
    }
    t.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_quartics() {
        // ∫ over the reference triangle of l0^2 l1^2 = 2! 2! 0! 2! / 6! * 2|T|... with |T| = 1/2
        let exact = 4.0 / 720.0 * 2.0;
        let q: f64 = TRI_QUAD.iter().map(|(l, w)| w * l[0].powi(2) * l[1].powi(2)).sum();
        assert!((q - exact).abs() < 1e-14, "{q} vs {exact}");
        let s: f64 = TRI_QUAD.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p2_basis_partition_of_unity() {
        let l = [0.2, 0.3, 0.5];
        let s: f64 = p2_values(l).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let g = [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];
        let d = p2_grads(l, &g);
        let sx: f64 = d.iter().map(|v| v[0]).sum();
        assert!(sx.abs() < 1e-14);
    }
}
