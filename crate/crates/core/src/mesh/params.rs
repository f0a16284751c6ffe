use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Height of the beam-shaped plate.
pub const BEAM_HEIGHT: f64 = 0.1;
/// Edge length of the square plate with a hole.
pub const PLATE_SIZE: f64 = 1.0;
/// Centre of the hole.
pub const HOLE_CENTER: Point = Point { x: 0.5, z: 0.5 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryCase {
    /// Cantilevered `l x 0.1` plate; parameter: length `l`.
    BeamPlate,
    /// Unit plate with a circular hole; parameter: diameter `d`.
    CircularHole,
    /// Unit plate with an elliptic hole; parameters: diameters `d_x`, `d_z`.
    EllipticHole,
}

impl GeometryCase {
    /// Admissible parameter interval per dimension.
    pub fn bounds(self) -> &'static [(f64, f64)] {
        match self {
            GeometryCase::BeamPlate => &[(0.8, 1.2)],
            GeometryCase::CircularHole => &[(0.2, 0.6)],
            GeometryCase::EllipticHole => &[(0.2, 0.4), (0.2, 0.4)],
        }
    }

    pub fn dim(self) -> usize {
        self.bounds().len()
    }

    fn names(self) -> &'static [&'static str] {
        match self {
            GeometryCase::BeamPlate => &["length"],
            GeometryCase::CircularHole => &["diameter"],
            GeometryCase::EllipticHole => &["diameter_x", "diameter_z"],
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        self.names()
    }
}

/// Hole outline: centre and semi-axes along `x` and `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleShape {
    pub center: Point,
    pub a: f64,
    pub b: f64,
}

impl HoleShape {
    pub fn is_circle(&self) -> bool {
        self.a == self.b
    }

    /// Maps `p` radially (about the centre) onto the outline.
    pub fn project(&self, p: Point) -> Point {
        let v = p - self.center;
        let s = ((v.x / self.a).powi(2) + (v.z / self.b).powi(2)).sqrt();
        self.center + v * (1.0 / s)
    }

    /// Deviation of `p` from the implicit outline equation, scaled to length.
    pub fn outline_residual(&self, p: Point) -> f64 {
        let v = p - self.center;
        let s = ((v.x / self.a).powi(2) + (v.z / self.b).powi(2)).sqrt();
        (s - 1.0).abs() * self.a.min(self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    pub case: GeometryCase,
    pub p: Vec<f64>,
}

impl GeometryParams {
    /// Validates the dimension and bounds of `p`.
    pub fn new(case: GeometryCase, p: Vec<f64>) -> Result<Self> {
        let bounds = case.bounds();
        if p.len() != bounds.len() {
            return Err(Error::InvalidInput(format!(
                "{case:?} takes {} parameter(s), got {}",
                bounds.len(),
                p.len()
            )));
        }
        // Midpoints produced by bisection may land an ulp outside the box.
        let slack = 1e-12;
        for ((&v, &(lo, hi)), name) in p.iter().zip(bounds).zip(case.names()) {
            if !(v >= lo - slack && v <= hi + slack) {
                return Err(Error::ParameterOutOfBounds {
                    what: name,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { case, p })
    }

    pub fn beam(length: f64) -> Result<Self> {
        Self::new(GeometryCase::BeamPlate, vec![length])
    }

    pub fn circular(diameter: f64) -> Result<Self> {
        Self::new(GeometryCase::CircularHole, vec![diameter])
    }

    pub fn elliptic(dx: f64, dz: f64) -> Result<Self> {
        Self::new(GeometryCase::EllipticHole, vec![dx, dz])
    }

    /// Beam length; `None` for the hole cases.
    pub fn length(&self) -> Option<f64> {
        (self.case == GeometryCase::BeamPlate).then(|| self.p[0])
    }

    /// Hole outline; `None` for the beam.
    pub fn hole(&self) -> Option<HoleShape> {
        let (dx, dz) = match self.case {
            GeometryCase::BeamPlate => return None,
            GeometryCase::CircularHole => (self.p[0], self.p[0]),
            GeometryCase::EllipticHole => (self.p[0], self.p[1]),
        };
        Some(HoleShape {
            center: HOLE_CENTER,
            a: 0.5 * dx,
            b: 0.5 * dz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_enforced() {
        assert!(GeometryParams::beam(0.8).is_ok());
        assert!(matches!(
            GeometryParams::beam(1.3),
            Err(Error::ParameterOutOfBounds { what: "length", .. })
        ));
        assert!(GeometryParams::circular(0.1).is_err());
        assert!(GeometryParams::elliptic(0.3, 0.41).is_err());
        assert!(GeometryParams::new(GeometryCase::EllipticHole, vec![0.3]).is_err());
    }

    #[test]
    fn projection_lands_on_ellipse() {
        let h = GeometryParams::elliptic(0.4, 0.2).unwrap().hole().unwrap();
        let q = h.project(Point::new(0.9, 0.7));
        assert!(h.outline_residual(q) < 1e-15);
        let v = q - h.center;
        assert!(((v.x / 0.2).powi(2) + (v.z / 0.1).powi(2) - 1.0).abs() < 1e-14);
    }
}
