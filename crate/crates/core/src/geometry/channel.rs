use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    DirichletNoSlip,
    DirichletData,
    TractionNeumann,
    FreeSlip,
}

impl BoundaryTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryTag::DirichletNoSlip | BoundaryTag::DirichletData)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl SideTags {
    pub fn uniform(tag: BoundaryTag) -> Self {
        SideTags { bottom: tag, right: tag, top: tag, left: tag }
    }

    pub fn get(&self, side: Side) -> BoundaryTag {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }

    pub fn set(&mut self, side: Side, tag: BoundaryTag) {
        match side {
            Side::Bottom => self.bottom = tag,
            Side::Right => self.right = tag,
            Side::Top => self.top = tag,
            Side::Left => self.left = tag,
        }
    }
}

/// Boundary condition layouts used by the channel experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcPreset {
    /// Velocity on top and bottom, traction on the short ends.
    LongNoslip,
    /// Velocity on top, traction on bottom and on the short ends.
    LongNoslipTraction,
    /// No-slip bottom, free-slip top, traction on the short ends.
    FreeslipNoslip,
    /// Free-slip top and bottom, traction on the short ends.
    FreeslipOnly,
    AllDirichlet,
}

impl BcPreset {
    pub fn tags(self) -> SideTags {
        use BoundaryTag::*;
        let (bottom, top) = match self {
            BcPreset::LongNoslip => (DirichletData, DirichletData),
            BcPreset::LongNoslipTraction => (TractionNeumann, DirichletData),
            BcPreset::FreeslipNoslip => (DirichletData, FreeSlip),
            BcPreset::FreeslipOnly => (FreeSlip, FreeSlip),
            BcPreset::AllDirichlet => return SideTags::uniform(DirichletData),
        };
        SideTags { bottom, right: TractionNeumann, top, left: TractionNeumann }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "long_noslip" => BcPreset::LongNoslip,
            "long_noslip_traction" => BcPreset::LongNoslipTraction,
            "freeslip_noslip" => BcPreset::FreeslipNoslip,
            "freeslip_only" => BcPreset::FreeslipOnly,
            "all_dirichlet" => BcPreset::AllDirichlet,
            other => return Err(Error::Parameter(format!("unknown bc preset '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BcPreset::LongNoslip => "long_noslip",
            BcPreset::LongNoslipTraction => "long_noslip_traction",
            BcPreset::FreeslipNoslip => "freeslip_noslip",
            BcPreset::FreeslipOnly => "freeslip_only",
            BcPreset::AllDirichlet => "all_dirichlet",
        }
    }
}

/// Symmetric trapezoidal notch cut into the top and bottom walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constriction {
    pub x_center: f64,
    pub depth: f64,
}

impl Constriction {
    pub const PLATEAU_HALF_WIDTH: f64 = 0.25;
    pub const RAMP_WIDTH: f64 = 0.25;

    /// Local notch depth at `x`: `depth` on the plateau, linear ramps to zero.
    pub fn depth_at(&self, x: f64) -> f64 {
        let d = (x - self.x_center).abs();
        if d <= Self::PLATEAU_HALF_WIDTH {
            self.depth
        } else if d < Self::PLATEAU_HALF_WIDTH + Self::RAMP_WIDTH {
            self.depth * (Self::PLATEAU_HALF_WIDTH + Self::RAMP_WIDTH - d) / Self::RAMP_WIDTH
        } else {
            0.0
        }
    }

    pub fn footprint(&self) -> (f64, f64) {
        let hw = Self::PLATEAU_HALF_WIDTH + Self::RAMP_WIDTH;
        (self.x_center - hw, self.x_center + hw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    pub length: f64,
    pub width: f64,
    pub constrictions: Vec<Constriction>,
    pub tags: SideTags,
}

impl ChannelGeometry {
    pub fn new(length: f64, width: f64, tags: SideTags) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || !(width > 0.0 && width.is_finite()) {
            return Err(Error::Geometry(format!("channel needs L > 0 and W > 0, got L={length}, W={width}")));
        }
        Ok(ChannelGeometry { length, width, constrictions: Vec::new(), tags })
    }

    pub fn with_preset(length: f64, width: f64, preset: BcPreset) -> Result<Self> {
        Self::new(length, width, preset.tags())
    }

    pub fn with_constriction(mut self, x_center: f64, depth: f64) -> Result<Self> {
        if !(depth >= 0.0) || depth >= 0.5 * self.width {
            return Err(Error::Geometry(format!(
                "constriction depth r={depth} must satisfy 0 <= r < W/2 = {}",
                0.5 * self.width
            )));
        }
        if !(0.0..=self.length).contains(&x_center) {
            return Err(Error::Geometry(format!("constriction center {x_center} outside (0, {})", self.length)));
        }
        self.constrictions.push(Constriction { x_center, depth });
        Ok(self)
    }

    pub fn is_rectangle(&self) -> bool {
        self.constrictions.iter().all(|c| c.depth == 0.0)
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.length / self.width
    }

    pub fn notch_depth(&self, x: f64) -> f64 {
        self.constrictions.iter().map(|c| c.depth_at(x)).fold(0.0, f64::max)
    }

    /// Gap height `W(x) = W - 2 r(x)`.
    pub fn local_width(&self, x: f64) -> f64 {
        self.width - 2.0 * self.notch_depth(x)
    }

    pub fn min_width(&self) -> f64 {
        let mut m = self.width;
        for c in &self.constrictions {
            m = m.min(self.width - 2.0 * c.depth);
        }
        m
    }

    /// Point lies in the closed fluid domain.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r = self.notch_depth(x);
        (0.0..=self.length).contains(&x) && y >= r && y <= self.width - r
    }

    /// Area of the fluid domain, integrating the piecewise linear gap exactly.
    pub fn area(&self) -> f64 {
        let mut knots = vec![0.0, self.length];
        for c in &self.constrictions {
            let p = Constriction::PLATEAU_HALF_WIDTH;
            let q = p + Constriction::RAMP_WIDTH;
            knots.extend([c.x_center - q, c.x_center - p, c.x_center + p, c.x_center + q]);
        }
        integrate_piecewise_linear(&mut knots, 0.0, self.length, |x| self.local_width(x))
    }

    pub fn has_dirichlet(&self) -> bool {
        Side::ALL.iter().any(|&s| self.tags.get(s).is_dirichlet()) || !self.is_rectangle()
    }

    pub fn has_traction(&self) -> bool {
        Side::ALL.iter().any(|&s| self.tags.get(s) == BoundaryTag::TractionNeumann)
    }

    /// No traction facet: pressure is determined up to a constant.
    pub fn singular_pressure(&self) -> bool {
        !self.has_traction()
    }

    /// No Dirichlet facet: the velocity operator has the rigid translation
    /// compatible with the free-slip sides in its kernel.
    pub fn singular_velocity(&self) -> bool {
        !self.has_dirichlet()
    }
}

/// Integral over `[a, b]` of a function that is linear between `knots`.
pub(crate) fn integrate_piecewise_linear(knots: &mut Vec<f64>, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    knots.retain(|&k| k > a && k < b);
    knots.push(a);
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + f(w[1]))).sum()
}
