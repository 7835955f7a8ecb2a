use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, ChannelGeometry, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints ordered counter-clockwise around the domain.
    pub vertices: [usize; 2],
    pub side: Side,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Side length of the structured cells (largest of the two directions).
    pub h: f64,
    pub level: u32,
    pub cells: (usize, usize),
}

/// Unique edges of a mesh with the triangle-to-edge incidence. Local edge
/// `k` of a triangle is the one opposite vertex `k`.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub tri_edges: Vec<[usize; 3]>,
    /// Number of triangles sharing each edge.
    pub multiplicity: Vec<u8>,
}

/// Structured triangulation of `(0, L) x (0, W)`: base cells of size about
/// `min(1, W)`, each split along its bottom-left to top-right diagonal, then
/// `level` uniform refinements.
pub fn build_rect_tri_mesh(geom: &ChannelGeometry, level: i32) -> Result<TriMesh> {
    if level < 0 {
        return Err(Error::Parameter(format!("refinement level must be >= 0, got {level}")));
    }
    if !geom.is_rectangle() {
        return Err(Error::Unsupported("triangulation of constricted channels".into()));
    }
    let h0 = geom.width.min(1.0);
    let nx0 = ((geom.length / h0) - 1e-9).ceil().max(1.0) as usize;
    let ny0 = ((geom.width / h0) - 1e-9).ceil().max(1.0) as usize;
    let s = 1usize << level;
    let (nx, ny) = (nx0 * s, ny0 * s);
    Ok(structured_mesh(geom, nx, ny, level as u32))
}

pub(crate) fn structured_mesh(geom: &ChannelGeometry, nx: usize, ny: usize, level: u32) -> TriMesh {
    let hx = geom.length / nx as f64;
    let hy = geom.width / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { geom.length } else { i as f64 * hx };
            let y = if j == ny { geom.width } else { j as f64 * hy };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], side: Side::Bottom, tag: geom.tags.bottom });
    }
    for j in 0..ny {
        boundary.push(BoundaryEdge { vertices: [vid(nx, j), vid(nx, j + 1)], side: Side::Right, tag: geom.tags.right });
    }
    for i in (0..nx).rev() {
        boundary.push(BoundaryEdge { vertices: [vid(i + 1, ny), vid(i, ny)], side: Side::Top, tag: geom.tags.top });
    }
    for j in (0..ny).rev() {
        boundary.push(BoundaryEdge { vertices: [vid(0, j + 1), vid(0, j)], side: Side::Left, tag: geom.tags.left });
    }
    TriMesh { vertices, triangles, boundary, h: hx.max(hy), level, cells: (nx, ny) }
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_table(&self) -> EdgeTable {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len() / 2 + 8);
        let mut edges = Vec::new();
        let mut multiplicity = Vec::new();
        let mut tri_edges = Vec::with_capacity(self.triangles.len());
        for tri in &self.triangles {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    multiplicity.push(0u8);
                    edges.len() - 1
                });
                multiplicity[id] += 1;
                te[k] = id;
            }
            tri_edges.push(te);
        }
        EdgeTable { edges, tri_edges, multiplicity }
    }

    /// Map from sorted vertex pair to boundary edge position.
    pub fn boundary_lookup(&self) -> HashMap<(usize, usize), usize> {
        self.boundary
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let [a, b] = e.vertices;
                ((a.min(b), a.max(b)), k)
            })
            .collect()
    }

    /// Plain-text dump: vertex list, triangle list, tagged boundary edges.
    pub fn write_ascii<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary {}", self.boundary.len())?;
        for e in &self.boundary {
            writeln!(w, "{} {} {:?} {:?}", e.vertices[0], e.vertices[1], e.side, e.tag)?;
        }
        Ok(())
    }
}
