//! Planar convex bodies.
//!
//! A [`ConvexBody`] carries two views of the same set: an exact shape (a
//! convex polygon "core" thickened by a disc of some radius, which covers
//! polygons, discs, and every Minkowski combination or rotation mean of
//! them) and the support function sampled on a [`DirectionGrid`]. Support
//! additivity, Hausdorff distances and mean widths are read from the
//! samples; membership, chords and areas use the exact shape when there is
//! one.

mod body;
pub mod polygon;
mod shape;

pub use body::{BodyKind, ConvexBody};
pub use shape::Shape;

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

/// Default number of sampled support directions.
pub const DEFAULT_DIRECTIONS: usize = 720;

/// A point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Counterclockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        self / self.norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// cos/sin with exact values at multiples of a quarter turn.
fn unit_at(angle: f64) -> (f64, f64) {
    let quarters = angle / (PI / 2.0);
    let k = quarters.round();
    if (quarters - k).abs() < 1e-13 {
        match (k as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        (angle.cos(), angle.sin())
    }
}

/// A rotation of the plane about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    angle: f64,
    cos: f64,
    sin: f64,
}

impl Rotation {
    pub fn new(angle: f64) -> Self {
        let (cos, sin) = unit_at(angle);
        Self { angle, cos, sin }
    }

    pub fn identity() -> Self {
        Self::new(0.0)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn inverse(&self) -> Self {
        Self {
            angle: -self.angle,
            cos: self.cos,
            sin: -self.sin,
        }
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.cos * v.x - self.sin * v.y,
            self.sin * v.x + self.cos * v.y,
        )
    }
}

/// `count` equally spaced unit directions `(cos 2πj/M, sin 2πj/M)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirectionGrid {
    count: usize,
}

impl Default for DirectionGrid {
    fn default() -> Self {
        Self {
            count: DEFAULT_DIRECTIONS,
        }
    }
}

impl DirectionGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count < 8 || !count.is_multiple_of(4) {
            return arg(format!(
                "direction count must be >= 8 and divisible by 4, got {count}"
            ));
        }
        Ok(Self { count })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Angular spacing.
    pub fn step(&self) -> f64 {
        2.0 * PI / self.count as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }

    pub fn direction(&self, j: usize) -> Vec2 {
        let (c, s) = unit_at(self.angle(j));
        Vec2::new(c, s)
    }

    pub fn directions(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.count).map(|j| self.direction(j))
    }

    /// Index of the grid direction closest to the angle of `xi`.
    pub fn nearest(&self, xi: Vec2) -> usize {
        let a = xi.y.atan2(xi.x).rem_euclid(2.0 * PI);
        ((a / self.step()).round() as usize) % self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_inverse_round_trip() {
        for &a in &[0.3, -1.2, 2.0 * PI / 7.0, 5.5] {
            let r = Rotation::new(a);
            let p = Vec2::new(0.7, -1.9);
            let q = r.inverse().apply(r.apply(p));
            assert!((q - p).norm() < 1e-12);
        }
    }

    #[test]
    fn quarter_turns_are_exact() {
        let r = Rotation::new(PI / 2.0);
        assert_eq!(r.apply(Vec2::new(1.0, 2.0)), Vec2::new(-2.0, 1.0));
        let g = DirectionGrid::default();
        assert_eq!(g.direction(180), Vec2::new(0.0, 1.0));
        assert_eq!(g.direction(360), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn direction_grid_validation() {
        assert!(DirectionGrid::new(4).is_err());
        assert!(DirectionGrid::new(30).is_err());
        assert!(DirectionGrid::new(8).is_ok());
        let g = DirectionGrid::new(8).unwrap();
        assert_eq!(g.nearest(Vec2::new(1.0, 1.05)), 1);
        assert_eq!(g.nearest(Vec2::new(1.0, -0.01)), 0);
    }
}
