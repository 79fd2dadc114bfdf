//! Points and displacement vectors in the cell frame.
//!
//! The base station sits at `(0, 0, H)`, tasks lie on the ground plane
//! `z = 0`, and all coordinates are meters.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point (or displacement) in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn horizontal_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        (*self - *other).norm()
    }

    pub fn dot(&self, other: &Position3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Position3) -> Position3 {
        Position3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    /// Unit vector in the same direction, or `None` for a zero-length vector.
    pub fn normalized(&self) -> Option<Position3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    /// Point reached by moving from `self` toward `target` by at most `step` meters.
    pub fn step_toward(&self, target: &Position3, step: f64) -> Position3 {
        let delta = *target - *self;
        let d = delta.norm();
        if d <= step || d == 0.0 {
            *target
        } else {
            *self + delta * (step / d)
        }
    }
}

impl Add for Position3 {
    type Output = Position3;
    fn add(self, rhs: Position3) -> Position3 {
        Position3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Position3 {
    type Output = Position3;
    fn sub(self, rhs: Position3) -> Position3 {
        Position3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Position3;
    fn mul(self, rhs: f64) -> Position3 {
        Position3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Position3 {
    type Output = Position3;
    fn neg(self) -> Position3 {
        Position3::new(-self.x, -self.y, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_toward_stops_at_target() {
        let a = Position3::new(0.0, 0.0, 10.0);
        let b = Position3::new(30.0, 40.0, 10.0);
        assert_eq!(a.step_toward(&b, 100.0), b);
        let mid = a.step_toward(&b, 25.0);
        assert!((mid.distance(&a) - 25.0).abs() < 1e-12);
        assert!((mid.distance(&b) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_has_no_direction() {
        assert!(Position3::ORIGIN.normalized().is_none());
    }
}
