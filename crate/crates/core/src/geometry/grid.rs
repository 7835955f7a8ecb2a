use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, ChannelGeometry, Side};

/// Where a velocity slot sits relative to the active cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FacePosition {
    /// Between two active cells.
    Interior,
    /// On the outer boundary of the channel, next to one active cell.
    Boundary(Side, BoundaryTag),
    /// Between an active and a masked cell: a no-slip wall.
    MaskWall,
    /// Not adjacent to any active cell.
    Absent,
}

/// Cartesian MAC layout over `(0, L) x (0, W)`: pressure at cell centers,
/// x-velocity on vertical faces, y-velocity on horizontal faces.
#[derive(Debug, Clone)]
pub struct StaggeredGrid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub geometry: ChannelGeometry,
    active: Vec<bool>,
}

/// Grid with square cells of size `h`; `L/h` and `W/h` must be integers.
pub fn build_staggered_grid(geom: &ChannelGeometry, h: f64) -> Result<StaggeredGrid> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
    }
    let count = |len: f64, what: &str| -> Result<usize> {
        let n = (len / h).round();
        if n < 1.0 || (n * h - len).abs() > 1e-9 * len.max(1.0) {
            return Err(Error::Geometry(format!("{what} {len} is not an integer multiple of h = {h}")));
        }
        Ok(n as usize)
    };
    let nx = count(geom.length, "length")?;
    let ny = count(geom.width, "width")?;
    build_staggered_grid_cells(geom, nx, ny)
}

/// Grid with `nx x ny` cells, allowing rectangular cells.
pub fn build_staggered_grid_cells(geom: &ChannelGeometry, nx: usize, ny: usize) -> Result<StaggeredGrid> {
    if nx == 0 || ny == 0 {
        return Err(Error::Geometry("grid needs at least one cell per direction".into()));
    }
    for c in &geom.constrictions {
        if c.depth >= 0.5 * geom.width {
            return Err(Error::Geometry(format!("constriction r={} blocks the channel", c.depth)));
        }
    }
    let hx = geom.length / nx as f64;
    let hy = geom.width / ny as f64;
    let mut active = vec![true; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (xc, yc) = ((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy);
            let r = geom.notch_depth(xc);
            if yc < r || geom.width - yc < r {
                active[j * nx + i] = false;
            }
        }
    }
    // every column must keep an open path
    for i in 0..nx {
        if (0..ny).all(|j| !active[j * nx + i]) {
            return Err(Error::Geometry(format!("grid column {i} is fully masked; refine h")));
        }
    }
    Ok(StaggeredGrid { nx, ny, hx, hy, geometry: geom.clone(), active })
}

impl StaggeredGrid {
    pub fn is_square(&self) -> bool {
        (self.hx - self.hy).abs() <= 1e-12 * self.hx.max(self.hy)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.active[j * self.nx + i]
    }

    /// Activity that treats out-of-range cells as absent.
    pub fn active_at(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.is_active(i as usize, j as usize)
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy]
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Location of x-velocity slot `(i, j)`, `i in 0..=nx`, `j in 0..ny`.
    pub fn u_location(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.hx, (j as f64 + 0.5) * self.hy]
    }

    /// Location of y-velocity slot `(i, j)`, `i in 0..nx`, `j in 0..=ny`.
    pub fn v_location(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx, j as f64 * self.hy]
    }

    pub fn num_u_slots(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn num_v_slots(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    /// Classification of the vertical face `(i, j)` between cells `(i-1, j)` and `(i, j)`.
    pub fn u_face(&self, i: usize, j: usize) -> FacePosition {
        let (i, j) = (i as isize, j as isize);
        let (a, b) = (self.active_at(i - 1, j), self.active_at(i, j));
        match (a, b) {
            (true, true) => FacePosition::Interior,
            (false, false) => FacePosition::Absent,
            _ if i == 0 => FacePosition::Boundary(Side::Left, self.geometry.tags.left),
            _ if i as usize == self.nx => FacePosition::Boundary(Side::Right, self.geometry.tags.right),
            _ => FacePosition::MaskWall,
        }
    }

    /// Classification of the horizontal face `(i, j)` between cells `(i, j-1)` and `(i, j)`.
    pub fn v_face(&self, i: usize, j: usize) -> FacePosition {
        let (i, j) = (i as isize, j as isize);
        let (a, b) = (self.active_at(i, j - 1), self.active_at(i, j));
        match (a, b) {
            (true, true) => FacePosition::Interior,
            (false, false) => FacePosition::Absent,
            _ if j == 0 => FacePosition::Boundary(Side::Bottom, self.geometry.tags.bottom),
            _ if j as usize == self.ny => FacePosition::Boundary(Side::Top, self.geometry.tags.top),
            _ => FacePosition::MaskWall,
        }
    }
}
