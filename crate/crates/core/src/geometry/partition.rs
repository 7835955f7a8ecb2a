use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, ChannelGeometry, Constriction, Side};

/// Axis-aligned coarse cell spanning the full channel height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseCell {
    pub x0: f64,
    pub x1: f64,
    /// Fluid area inside the cell.
    pub volume: f64,
}

impl CoarseCell {
    pub fn diameter(&self, width: f64) -> f64 {
        (self.x1 - self.x0).hypot(width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseFace {
    /// `(Ω₋, Ω₊)` with `Ω₋` to the left.
    pub cells: (usize, usize),
    pub x: f64,
    /// Active cross-section length `|F|`.
    pub measure: f64,
    /// Face diameter `H_F`.
    pub diameter: f64,
    /// Distance between the centroids of the two cells, `ℓ_F`.
    pub centroid_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannFace {
    pub cell: usize,
    pub side: Side,
    pub measure: f64,
    pub diameter: f64,
    /// Distance from the cell centroid to the face centroid.
    pub centroid_distance: f64,
}

#[derive(Debug, Clone)]
pub struct CoarsePartition {
    pub cells: Vec<CoarseCell>,
    pub faces: Vec<CoarseFace>,
    pub neumann_faces: Vec<NeumannFace>,
    pub width: f64,
    pub h_min: f64,
    /// Recorded constant `C` with `W <= C H_min`.
    pub coarseness: f64,
}

/// Default coarse size: square `W x W` columns, i.e. `L` unit cells when
/// `W = 1`.
pub fn default_target_h(geom: &ChannelGeometry) -> f64 {
    geom.width
}

/// Splits the channel into full-height columns. Uniform channels get
/// `round(L / target_H)` equal columns; over constrictions the column width
/// follows the local gap so cells stay close to square.
pub fn build_coarse_partition(geom: &ChannelGeometry, target_h: f64) -> Result<CoarsePartition> {
    if !(target_h > 0.0) {
        return Err(Error::Parameter(format!("coarse size must be positive, got {target_h}")));
    }
    let l = geom.length;
    let mut breaks = vec![0.0];
    if geom.is_rectangle() {
        let n = ((l / target_h).round() as usize).max(1);
        for k in 1..n {
            breaks.push(l * k as f64 / n as f64);
        }
    } else {
        let mut x = 0.0;
        let min_step = target_h * geom.min_width() / geom.width;
        while l - x > 1e-12 {
            // local gap over the prospective cell
            let probe = (0..=16).map(|k| x + target_h * k as f64 / 16.0).filter(|&s| s <= l);
            let gap = probe.map(|s| geom.local_width(s)).fold(f64::INFINITY, f64::min);
            let step = (target_h * gap / geom.width).max(min_step);
            x = (x + step).min(l);
            if l - x < 0.5 * step {
                x = l;
            }
            if x < l {
                breaks.push(x);
            }
        }
    }
    breaks.push(l);
    if breaks.len() < 2 {
        return Err(Error::Geometry("empty coarse partition".into()));
    }

    let mut knots: Vec<f64> = Vec::new();
    for c in &geom.constrictions {
        let p = Constriction::PLATEAU_HALF_WIDTH;
        let q = p + Constriction::RAMP_WIDTH;
        knots.extend([c.x_center - q, c.x_center - p, c.x_center + p, c.x_center + q]);
    }
    let cells: Vec<CoarseCell> = breaks
        .windows(2)
        .map(|w| {
            let mut k = knots.clone();
            let volume = super::channel::integrate_piecewise_linear(&mut k, w[0], w[1], |x| geom.local_width(x));
            CoarseCell { x0: w[0], x1: w[1], volume }
        })
        .collect();
    let centroid = |c: &CoarseCell| 0.5 * (c.x0 + c.x1);

    let mut faces = Vec::new();
    for k in 0..cells.len().saturating_sub(1) {
        let x = cells[k].x1;
        let measure = geom.local_width(x);
        faces.push(CoarseFace {
            cells: (k, k + 1),
            x,
            measure,
            diameter: measure,
            centroid_distance: centroid(&cells[k + 1]) - centroid(&cells[k]),
        });
    }

    let mut neumann_faces = Vec::new();
    let last = cells.len() - 1;
    for side in Side::ALL {
        if geom.tags.get(side) != BoundaryTag::TractionNeumann {
            continue;
        }
        match side {
            Side::Left | Side::Right => {
                let (cell, x) = if side == Side::Left { (0, 0.0) } else { (last, l) };
                let measure = geom.local_width(x);
                neumann_faces.push(NeumannFace {
                    cell,
                    side,
                    measure,
                    diameter: measure,
                    centroid_distance: (centroid(&cells[cell]) - x).abs(),
                });
            }
            Side::Bottom | Side::Top => {
                for (k, c) in cells.iter().enumerate() {
                    let len = c.x1 - c.x0;
                    neumann_faces.push(NeumannFace {
                        cell: k,
                        side,
                        measure: len,
                        diameter: len,
                        centroid_distance: 0.5 * geom.width,
                    });
                }
            }
        }
    }

    let h_min = cells.iter().map(|c| c.diameter(geom.width)).fold(f64::INFINITY, f64::min);
    Ok(CoarsePartition { cells, faces, neumann_faces, width: geom.width, h_min, coarseness: geom.width / h_min })
}

impl CoarsePartition {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Index of the column containing `x` (right-closed at the channel end).
    pub fn locate(&self, x: f64) -> usize {
        match self.cells.binary_search_by(|c| {
            if x < c.x0 {
                std::cmp::Ordering::Greater
            } else if x >= c.x1 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(k) => k,
            Err(k) => k.min(self.cells.len() - 1),
        }
    }
}
