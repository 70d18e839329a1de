//! Six-axis loads expressed in the gripper wrist frame.
//!
//! Axis convention used throughout the crate: X is lateral (image
//! horizontal), Y points forward along the fingers (image vertical) and Z is
//! the camera optical axis, pointing up away from a surface the fingertips
//! press on.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Axis labels in storage order.
pub const AXIS_NAMES: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    /// Newtons.
    pub force: Vec3,
    /// Newton-meters.
    pub torque: Vec3,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        force: Vector3::new(0.0, 0.0, 0.0),
        torque: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            force: Vec3::new(a[0], a[1], a[2]),
            torque: Vec3::new(a[3], a[4], a[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        ]
    }

    /// A force applied at `point` (relative to the wrist origin).
    pub fn from_point_force(point: &Vec3, force: &Vec3) -> Self {
        Self {
            force: *force,
            torque: point.cross(force),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            force: self.force * s,
            torque: self.torque * s,
        }
    }

    /// Reflection about the Y-Z plane. Force is a polar vector and only its X
    /// component changes sign; torque is a pseudovector, so Y and Z flip.
    pub fn mirrored_x(&self) -> Self {
        Self {
            force: Vec3::new(-self.force.x, self.force.y, self.force.z),
            torque: Vec3::new(self.torque.x, -self.torque.y, -self.torque.z),
        }
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &Wrench) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force + rhs.force, self.torque + rhs.torque)
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force - rhs.force, self.torque - rhs.torque)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, rhs: f64) -> Wrench {
        self.scale(rhs)
    }
}

impl std::iter::Sum for Wrench {
    fn sum<I: Iterator<Item = Wrench>>(iter: I) -> Wrench {
        iter.fold(Wrench::ZERO, |acc, w| acc + w)
    }
}

/// Projection of `d` onto the line spanned by `f`.
pub fn vector_projection(d: &Vec3, f: &Vec3) -> Result<Vec3> {
    let ff = f.norm_squared();
    if ff <= 0.0 || !ff.is_finite() {
        return Err(Error::DegenerateProjection);
    }
    Ok(f * (d.dot(f) / ff))
}
