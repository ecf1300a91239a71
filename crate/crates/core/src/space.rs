//! Product spaces of open intervals, real lines and circles.
//!
//! A [`SupportSpace`] is an ordered list of coordinate kinds. Bounded
//! coordinates carry finite `(lower, upper)` bounds, periodic coordinates live
//! on the circle `R / 2πZ` with canonical range `[0, 2π)`, and real
//! coordinates are unconstrained.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Period of every circular coordinate.
pub const PERIOD: f64 = TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coord {
    Bounded { lower: f64, upper: f64 },
    Periodic,
    Real,
}

impl Coord {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Coord::Periodic)
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Coord::Bounded { lower, upper } => Some((lower, upper)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Coord>", into = "Vec<Coord>")]
pub struct SupportSpace {
    coords: Vec<Coord>,
}

impl TryFrom<Vec<Coord>> for SupportSpace {
    type Error = Error;

    fn try_from(coords: Vec<Coord>) -> Result<Self> {
        SupportSpace::new(coords)
    }
}

impl From<SupportSpace> for Vec<Coord> {
    fn from(space: SupportSpace) -> Self {
        space.coords
    }
}

impl SupportSpace {
    pub fn new(coords: Vec<Coord>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("a space needs at least one coordinate".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if let Coord::Bounded { lower, upper } = *c {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::Config(format!(
                        "coordinate {i}: bounds ({lower}, {upper}) must be finite with lower < upper"
                    )));
                }
            }
        }
        Ok(Self { coords })
    }

    /// `dim` copies of the same interval.
    pub fn hypercube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![Coord::Bounded { lower, upper }; dim])
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(vec![Coord::Real; dim])
    }

    pub fn torus(dim: usize) -> Result<Self> {
        Self::new(vec![Coord::Periodic; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Coord {
        self.coords[i]
    }

    pub fn periodic_mask(&self) -> Vec<bool> {
        self.coords.iter().map(Coord::is_periodic).collect()
    }

    pub fn has_periodic(&self) -> bool {
        self.coords.iter().any(Coord::is_periodic)
    }

    pub fn has_bounded(&self) -> bool {
        self.coords.iter().any(|c| c.bounds().is_some())
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    /// Reduces periodic coordinates into `[0, 2π)` in place.
    pub fn wrap_in_place(&self, point: &mut [f64]) {
        debug_assert_eq!(point.len(), self.dim());
        for (x, c) in point.iter_mut().zip(&self.coords) {
            if c.is_periodic() {
                *x = wrap_angle(*x);
            }
        }
    }

    pub fn wrap(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point.len())?;
        let mut out = point.to_vec();
        self.wrap_in_place(&mut out);
        Ok(out)
    }

    /// `Σ ln(upper − lower)` over bounded coordinates plus `ln 2π` per circle.
    /// Real coordinates contribute nothing.
    pub fn log_volume(&self) -> f64 {
        self.coords
            .iter()
            .map(|c| match *c {
                Coord::Bounded { lower, upper } => (upper - lower).ln(),
                Coord::Periodic => PERIOD.ln(),
                Coord::Real => 0.0,
            })
            .sum()
    }

    /// Per-coordinate `x − y`, using the shortest arc on periodic coordinates.
    pub fn toroidal_displacement(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        let mut out = vec![0.0; x.len()];
        self.displacement_into(x, y, &mut out);
        Ok(out)
    }

    pub(crate) fn displacement_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for (i, c) in self.coords.iter().enumerate() {
            let d = x[i] - y[i];
            out[i] = if c.is_periodic() { shortest_arc(d) } else { d };
        }
    }
}

/// Reduces `x` into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(PERIOD);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= PERIOD {
        0.0
    } else {
        r
    }
}

/// Representative of `d` modulo 2π in `(−π, π]`.
pub fn shortest_arc(d: f64) -> f64 {
    let r = wrap_angle(d);
    if r > PI {
        r - PERIOD
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        let s = SupportSpace::torus(1).unwrap();
        assert!((s.wrap(&[7.0]).unwrap()[0] - (7.0 - TAU)).abs() < 1e-15);
        assert!((s.wrap(&[7.0]).unwrap()[0] - 0.71681).abs() < 1e-5);
        assert_eq!(s.wrap(&[1.25]).unwrap()[0], 1.25);
        let w = s.wrap(&[-0.5]).unwrap()[0];
        assert!((w - (TAU - 0.5)).abs() < 1e-15);
        assert!((w - 5.78319).abs() < 1e-5);
        assert_eq!(wrap_angle(-1e-300), 0.0);
    }

    #[test]
    fn wrap_leaves_bounded_alone() {
        let s = SupportSpace::new(vec![
            Coord::Bounded { lower: 0.0, upper: 100.0 },
            Coord::Periodic,
        ])
        .unwrap();
        assert_eq!(s.wrap(&[42.0, 7.0]).unwrap()[0], 42.0);
        assert!(matches!(
            s.wrap(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn log_volume_examples() {
        assert_eq!(SupportSpace::hypercube(2, 0.0, 1.0).unwrap().log_volume(), 0.0);
        let s = SupportSpace::new(vec![
            Coord::Bounded { lower: 0.0, upper: 2.0 },
            Coord::Bounded { lower: 0.0, upper: 3.0 },
        ])
        .unwrap();
        assert!((s.log_volume() - 6f64.ln()).abs() < 1e-15);
        let s = SupportSpace::new(vec![
            Coord::Bounded { lower: 0.0, upper: 1.0 },
            Coord::Periodic,
        ])
        .unwrap();
        assert!((s.log_volume() - TAU.ln()).abs() < 1e-15);
    }

    #[test]
    fn displacement_examples() {
        let s = SupportSpace::torus(1).unwrap();
        let d = s.toroidal_displacement(&[0.1], &[6.2]).unwrap()[0];
        assert!((d - (0.1 - 6.2 + TAU)).abs() < 1e-14);
        assert!((d - 0.18319).abs() < 1e-5);
        assert_eq!(s.toroidal_displacement(&[2.0], &[2.0]).unwrap()[0], 0.0);
        let b = SupportSpace::hypercube(1, 0.0, 1.0).unwrap();
        assert!((b.toroidal_displacement(&[0.4], &[0.9]).unwrap()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(SupportSpace::hypercube(1, 1.0, 1.0).is_err());
        assert!(SupportSpace::hypercube(1, 0.0, f64::INFINITY).is_err());
        let json = r#"[{"kind":"bounded","lower":2.0,"upper":1.0}]"#;
        assert!(serde_json::from_str::<SupportSpace>(json).is_err());
    }

    #[test]
    fn serde_descriptor() {
        let json = r#"[{"kind":"bounded","lower":-5.0,"upper":5.0},{"kind":"periodic"},{"kind":"real"}]"#;
        let s: SupportSpace = serde_json::from_str(json).unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.periodic_mask(), vec![false, true, false]);
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(x in -1e6f64..1e6) {
            let w = wrap_angle(x);
            prop_assert!((0.0..PERIOD).contains(&w));
            prop_assert_eq!(wrap_angle(w), w);
        }

        #[test]
        fn wrap_is_periodic(x in -100.0f64..100.0) {
            let a = wrap_angle(x);
            let b = wrap_angle(x + PERIOD);
            // equal as points on the circle
            prop_assert!(shortest_arc(a - b).abs() < 1e-12);
        }

        #[test]
        fn displacement_is_short(x in 0.0f64..PERIOD, y in 0.0f64..PERIOD) {
            let d = shortest_arc(x - y);
            prop_assert!(d.abs() <= PI);
            prop_assert!(shortest_arc(d - (x - y)).abs() < 1e-12);
        }
    }
}
