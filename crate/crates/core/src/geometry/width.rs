use crate::geometry::ChannelGeometry;

/// Local channel height `W(x)`.
#[derive(Debug, Clone)]
pub enum WidthField {
    Constant(f64),
    Profile(ChannelGeometry),
}

pub fn width_field(geom: &ChannelGeometry) -> WidthField {
    if geom.is_rectangle() {
        WidthField::Constant(geom.width)
    } else {
        WidthField::Profile(geom.clone())
    }
}

impl WidthField {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WidthField::Constant(w) => *w,
            WidthField::Profile(g) => g.local_width(x),
        }
    }

    pub fn sample(&self, points: &[[f64; 2]]) -> Vec<f64> {
        points.iter().map(|p| self.eval(p[0])).collect()
    }

    pub fn min(&self) -> f64 {
        match self {
            WidthField::Constant(w) => *w,
            WidthField::Profile(g) => g.min_width(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, WidthField::Constant(_))
    }
}
