use std::f64::consts::PI;

use crate::wrench::Vec3;

/// Wrist pose: world position plus heading about the world Z axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            position: Vec3::zeros(),
            yaw: 0.0,
        }
    }
}

/// Wraps an angle into [-pi, pi).
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vec3::new(x, y, z), 0.0)
    }

    pub fn translated(&self, delta: &Vec3) -> Self {
        Self {
            position: self.position + delta,
            yaw: self.yaw,
        }
    }

    /// Rotates a wrist-frame vector into world orientation.
    pub fn rotate_to_world(&self, v: &Vec3) -> Vec3 {
        if self.yaw == 0.0 {
            return *v;
        }
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    /// Rotates a world-oriented vector into the wrist frame.
    pub fn rotate_to_wrist(&self, v: &Vec3) -> Vec3 {
        if self.yaw == 0.0 {
            return *v;
        }
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    pub fn point_to_world(&self, p: &Vec3) -> Vec3 {
        self.position + self.rotate_to_world(p)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite()) && self.yaw.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn rotation_round_trip() {
        let p = Pose::new(Vec3::new(1.0, 2.0, 3.0), 0.7);
        let v = Vec3::new(0.3, -0.2, 0.5);
        let back = p.rotate_to_wrist(&p.rotate_to_world(&v));
        assert!((back - v).norm() < 1e-15);
    }
}
