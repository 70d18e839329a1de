//! Penalty contact between fingertips and simple scene surfaces, and the
//! quasi-static coupling between contact load and gripper deformation.

use crate::error::{Error, Result};
use crate::gripper::{GripperConfiguration, GripperModel, FINGERS};
use crate::pose::Pose;
use crate::wrench::{Vec3, Wrench};

/// Tangential speeds below this produce no friction.
pub const FRICTION_DEAD_ZONE: f64 = 1e-6;
pub const RELAXATION: f64 = 0.5;
pub const MAX_ITERATIONS: usize = 50;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceShape {
    FreeSpace,
    /// Horizontal plane at the given world height, normal +Z.
    Plane { height: f64 },
    /// Solid cylinder; `half_length` bounds it along the axis when set.
    Cylinder {
        axis_point: Vec3,
        axis_dir: Vec3,
        radius: f64,
        half_length: Option<f64>,
    },
    /// Elastic cord from `anchor` to the grasp point.
    Tether {
        anchor: Vec3,
        slack_length: f64,
        stiffness: f64,
    },
    /// Soft horizontal layer with its own stiffness.
    SpringPile { rest_height: f64, stiffness: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSurface {
    pub shape: SurfaceShape,
    pub friction_mu: f64,
    pub contact_stiffness: f64,
}

impl SceneSurface {
    pub fn new(shape: SurfaceShape, friction_mu: f64, contact_stiffness: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&friction_mu) {
            return Err(Error::Config(format!("friction_mu {friction_mu} outside [0, 2]")));
        }
        if !(contact_stiffness > 0.0) {
            return Err(Error::Config("contact_stiffness must be positive".into()));
        }
        match &shape {
            SurfaceShape::Cylinder {
                radius, axis_dir, ..
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("cylinder radius must be positive".into()));
                }
                if axis_dir.norm() == 0.0 {
                    return Err(Error::Config("cylinder axis must be nonzero".into()));
                }
            }
            SurfaceShape::Tether {
                stiffness,
                slack_length,
                ..
            } => {
                if !(*stiffness > 0.0) || *slack_length < 0.0 {
                    return Err(Error::Config("tether needs stiffness > 0, slack >= 0".into()));
                }
            }
            SurfaceShape::SpringPile { stiffness, .. } => {
                if !(*stiffness > 0.0) {
                    return Err(Error::Config("pile stiffness must be positive".into()));
                }
            }
            _ => {}
        }
        let shape = match shape {
            SurfaceShape::Cylinder {
                axis_point,
                axis_dir,
                radius,
                half_length,
            } => SurfaceShape::Cylinder {
                axis_point,
                axis_dir: axis_dir.normalize(),
                radius,
                half_length,
            },
            s => s,
        };
        Ok(Self {
            shape,
            friction_mu,
            contact_stiffness,
        })
    }

    pub fn free_space() -> Self {
        Self {
            shape: SurfaceShape::FreeSpace,
            friction_mu: 0.0,
            contact_stiffness: 1.0,
        }
    }

    pub fn plane(height: f64, friction_mu: f64, contact_stiffness: f64) -> Result<Self> {
        Self::new(SurfaceShape::Plane { height }, friction_mu, contact_stiffness)
    }

    /// Penetration depth and outward unit normal at a world point.
    pub fn penetration(&self, p: &Vec3) -> Option<(f64, Vec3, f64)> {
        match &self.shape {
            SurfaceShape::Plane { height } => {
                let depth = height - p.z;
                (depth > 0.0).then(|| (depth, Vec3::z(), self.contact_stiffness))
            }
            SurfaceShape::SpringPile {
                rest_height,
                stiffness,
            } => {
                let depth = rest_height - p.z;
                (depth > 0.0).then(|| (depth, Vec3::z(), *stiffness))
            }
            SurfaceShape::Cylinder {
                axis_point,
                axis_dir,
                radius,
                half_length,
            } => {
                let rel = p - axis_point;
                let along = rel.dot(axis_dir);
                if let Some(h) = half_length {
                    if along.abs() > *h {
                        return None;
                    }
                }
                let radial = rel - axis_dir * along;
                let dist = radial.norm();
                let depth = radius - dist;
                if depth <= 0.0 || dist == 0.0 {
                    return None;
                }
                Some((depth, radial / dist, self.contact_stiffness))
            }
            SurfaceShape::FreeSpace | SurfaceShape::Tether { .. } => None,
        }
    }

    /// Closest surface point to `p` (used for marker bookkeeping).
    pub fn project_to_surface(&self, p: &Vec3) -> Vec3 {
        match &self.shape {
            SurfaceShape::Plane { height } => Vec3::new(p.x, p.y, *height),
            SurfaceShape::SpringPile { rest_height, .. } => Vec3::new(p.x, p.y, *rest_height),
            SurfaceShape::Cylinder {
                axis_point,
                axis_dir,
                radius,
                ..
            } => {
                let rel = p - axis_point;
                let along = rel.dot(axis_dir);
                let radial = rel - axis_dir * along;
                let n = radial.norm();
                let dir = if n > 0.0 { radial / n } else { Vec3::z() };
                axis_point + axis_dir * along + dir * *radius
            }
            SurfaceShape::FreeSpace | SurfaceShape::Tether { .. } => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint {
    pub finger: usize,
    /// World position of the fingertip.
    pub point: Vec3,
    pub normal: Vec3,
    /// Magnitude of the normal force, newtons.
    pub normal_force: f64,
    /// Total force on the fingertip, world orientation.
    pub force: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactState {
    /// Wrist-frame wrench.
    pub wrench: Wrench,
    pub contacts: Vec<ContactPoint>,
    /// Tether tension when the surface is a tether.
    pub tension: f64,
}

fn tangential_friction(mu: f64, normal: &Vec3, normal_force: f64, velocity: &Vec3) -> Vec3 {
    let vt = velocity - normal * velocity.dot(normal);
    let speed = vt.norm();
    if speed > FRICTION_DEAD_ZONE && mu > 0.0 {
        -vt * (mu * normal_force.abs() / speed)
    } else {
        Vec3::zeros()
    }
}

/// Contact wrench for an already-deformed configuration.
pub fn contact_state(
    config: &GripperConfiguration,
    pose: &Pose,
    surface: &SceneSurface,
    velocity: &Vec3,
) -> ContactState {
    let mut contacts = Vec::new();
    let mut force_world = Vec3::zeros();
    let mut torque_world = Vec3::zeros();
    let mut tension = 0.0;

    if let SurfaceShape::Tether {
        anchor,
        slack_length,
        stiffness,
    } = &surface.shape
    {
        let g = pose.point_to_world(&config.grasp_point());
        let to_anchor = anchor - g;
        let dist = to_anchor.norm();
        tension = stiffness * (dist - slack_length).max(0.0);
        if tension > 0.0 && dist > 0.0 {
            let f = to_anchor * (tension / dist);
            force_world += f;
            torque_world += (g - pose.position).cross(&f);
        }
    } else {
        for finger in 0..FINGERS {
            let p = pose.point_to_world(&config.tip(finger));
            if let Some((depth, n, k)) = surface.penetration(&p) {
                let normal_force = k * depth;
                let f = n * normal_force
                    + tangential_friction(surface.friction_mu, &n, normal_force, velocity);
                force_world += f;
                torque_world += (p - pose.position).cross(&f);
                contacts.push(ContactPoint {
                    finger,
                    point: p,
                    normal: n,
                    normal_force,
                    force: f,
                });
            }
        }
    }

    ContactState {
        wrench: Wrench::new(
            pose.rotate_to_wrist(&force_world),
            pose.rotate_to_wrist(&torque_world),
        ),
        contacts,
        tension,
    }
}

/// Contact wrench on the undeformed gripper.
pub fn contact_wrench(
    model: &GripperModel,
    pose: &Pose,
    surface: &SceneSurface,
    velocity: &Vec3,
) -> Wrench {
    contact_state(&model.rest_configuration(), pose, surface, velocity).wrench
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub config: GripperConfiguration,
    pub wrench: Wrench,
    pub contact: ContactState,
    pub iterations: usize,
    pub converged: bool,
}

/// Relaxed fixed-point iteration between deformation and contact load,
/// starting from zero load. Stops once the fixed-point residual drops below
/// [`TOLERANCE`]; after [`MAX_ITERATIONS`] the last iterate is returned with
/// `converged == false`.
pub fn solve_equilibrium(
    model: &GripperModel,
    pose: &Pose,
    surface: &SceneSurface,
    velocity: &Vec3,
) -> Equilibrium {
    let mut w = Wrench::ZERO;
    for iteration in 1..=MAX_ITERATIONS {
        let config = model.deform(&w);
        let contact = contact_state(&config, pose, surface, velocity);
        if contact.wrench.max_abs_diff(&w) < TOLERANCE {
            return Equilibrium {
                config,
                wrench: w,
                contact,
                iterations: iteration,
                converged: true,
            };
        }
        w = w.scale(1.0 - RELAXATION) + contact.wrench.scale(RELAXATION);
    }
    let config = model.deform(&w);
    let contact = contact_state(&config, pose, surface, velocity);
    log::debug!("equilibrium did not converge at pose {:?}", pose.position);
    Equilibrium {
        config,
        wrench: w,
        contact,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}
