//! Linear-compliance model of a two-finger soft gripper.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::wrench::{Vec3, Wrench};

pub const NODES_PER_FINGER: usize = 4;
pub const FINGERS: usize = 2;

/// Palm-to-tip node heights below the wrist, meters.
const NODE_Z: [f64; NODES_PER_FINGER] = [0.0, -0.008, -0.022, -0.04];
/// Length of a finger along Y, meters.
const FINGER_LENGTH: f64 = 0.09;
const PALM_HALF_WIDTH: f64 = 0.012;
const TIP_HALF_WIDTH_CLOSED: f64 = 0.006;
const TIP_HALF_WIDTH_OPEN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GripperKind {
    TendonActuated,
    Pneumatic,
}

impl GripperKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GripperKind::TendonActuated => "tendon_actuated",
            GripperKind::Pneumatic => "pneumatic",
        }
    }
}

impl fmt::Display for GripperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GripperKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tendon_actuated" | "tendon" => Ok(GripperKind::TendonActuated),
            "pneumatic" => Ok(GripperKind::Pneumatic),
            other => Err(Error::Config(format!("unknown gripper kind `{other}`"))),
        }
    }
}

pub type Skeleton = [[Vec3; NODES_PER_FINGER]; FINGERS];

#[derive(Debug, Clone, PartialEq)]
pub struct GripperModel {
    kind: GripperKind,
    compliance: Matrix6<f64>,
    aperture: f64,
    max_deflection: f64,
    rest: Skeleton,
}

/// Rest skeleton for a given aperture. Finger 0 sits at negative X.
pub fn rest_skeleton(aperture: f64) -> Skeleton {
    let tip_half = TIP_HALF_WIDTH_CLOSED + (TIP_HALF_WIDTH_OPEN - TIP_HALF_WIDTH_CLOSED) * aperture;
    let finger = |side: f64| {
        let mut nodes = [Vec3::zeros(); NODES_PER_FINGER];
        for (j, node) in nodes.iter_mut().enumerate() {
            let f = j as f64 / (NODES_PER_FINGER - 1) as f64;
            let x = PALM_HALF_WIDTH + (tip_half - PALM_HALF_WIDTH) * f;
            *node = Vec3::new(side * x, FINGER_LENGTH * f, NODE_Z[j]);
        }
        nodes
    };
    [finger(-1.0), finger(1.0)]
}

fn check_spd(c: &Matrix6<f64>) -> Result<()> {
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::Config("compliance has non-finite entries".into()));
    }
    if (c - c.transpose()).abs().max() > 1e-12 * c.abs().max().max(1.0) {
        return Err(Error::Config("compliance must be symmetric".into()));
    }
    if c.cholesky().is_none() {
        return Err(Error::Config(
            "compliance must be positive definite".into(),
        ));
    }
    Ok(())
}

impl GripperModel {
    pub fn new(
        kind: GripperKind,
        compliance: Matrix6<f64>,
        aperture: f64,
        max_deflection: f64,
    ) -> Result<Self> {
        check_spd(&compliance)?;
        if !(0.0..=1.0).contains(&aperture) {
            return Err(Error::Config(format!("aperture {aperture} outside [0, 1]")));
        }
        if !(max_deflection > 0.0) {
            return Err(Error::Config("max_deflection must be positive".into()));
        }
        Ok(Self {
            kind,
            compliance,
            aperture,
            max_deflection,
            rest: rest_skeleton(aperture),
        })
    }

    /// Flexure-supported fingertips: 4 mm/N, 0.05 rad/(N m).
    pub fn tendon_actuated() -> Self {
        let c = Matrix6::from_diagonal(&Vector6::new(0.004, 0.004, 0.004, 0.05, 0.05, 0.05));
        Self::new(GripperKind::TendonActuated, c, 1.0, 0.025).expect("preset is valid")
    }

    /// Silicone fingers, 2.5x the tendon compliance.
    pub fn pneumatic() -> Self {
        let c = Matrix6::from_diagonal(&Vector6::new(0.01, 0.01, 0.01, 0.125, 0.125, 0.125));
        Self::new(GripperKind::Pneumatic, c, 1.0, 0.04).expect("preset is valid")
    }

    pub fn preset(kind: GripperKind) -> Self {
        match kind {
            GripperKind::TendonActuated => Self::tendon_actuated(),
            GripperKind::Pneumatic => Self::pneumatic(),
        }
    }

    pub fn with_aperture(&self, aperture: f64) -> Self {
        let aperture = aperture.clamp(0.0, 1.0);
        Self {
            aperture,
            rest: rest_skeleton(aperture),
            ..self.clone()
        }
    }

    /// Replaces the rest geometry, e.g. for single-contact test fixtures.
    pub fn with_skeleton(&self, rest: Skeleton) -> Self {
        Self {
            rest,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> GripperKind {
        self.kind
    }

    pub fn compliance(&self) -> &Matrix6<f64> {
        &self.compliance
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// Factor applied to scene contact stiffness so the equilibrium iteration
    /// stays contractive for softer grippers.
    pub fn contact_stiffness_scale(&self) -> f64 {
        (0.004 / self.compliance[(2, 2)]).min(1.0)
    }

    pub fn max_deflection(&self) -> f64 {
        self.max_deflection
    }

    pub fn rest(&self) -> &Skeleton {
        &self.rest
    }

    pub fn rest_configuration(&self) -> GripperConfiguration {
        GripperConfiguration {
            nodes: self.rest,
            tip_displacement: [Vec3::zeros(); FINGERS],
            wrench: Wrench::ZERO,
        }
    }

    /// Unclamped fingertip displacement of each finger under `w`.
    pub fn tip_displacement_linear(&self, w: &Wrench) -> [Vec3; FINGERS] {
        let a = w.to_array();
        let d = self.compliance * Vector6::from_row_slice(&a);
        let translation = Vec3::new(d[0], d[1], d[2]);
        let rotation = Vec3::new(d[3], d[4], d[5]);
        let tip = |f: usize| translation + rotation.cross(&self.rest[f][NODES_PER_FINGER - 1]);
        [tip(0), tip(1)]
    }

    /// Deformed geometry under a wrist wrench. Fingertips move by the
    /// compliance response, clamped in norm; inner nodes follow a quadratic
    /// profile from zero at the palm.
    pub fn deform(&self, w: &Wrench) -> GripperConfiguration {
        let mut tips = self.tip_displacement_linear(w);
        for t in tips.iter_mut() {
            let n = t.norm();
            if n > self.max_deflection {
                *t *= self.max_deflection / n;
            }
        }
        let mut nodes = self.rest;
        for (f, finger) in nodes.iter_mut().enumerate() {
            for (j, node) in finger.iter_mut().enumerate() {
                let s = j as f64 / (NODES_PER_FINGER - 1) as f64;
                *node += tips[f] * (s * s);
            }
        }
        GripperConfiguration {
            nodes,
            tip_displacement: tips,
            wrench: *w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GripperConfiguration {
    /// Node positions in the wrist frame, palm first.
    pub nodes: Skeleton,
    pub tip_displacement: [Vec3; FINGERS],
    pub wrench: Wrench,
}

impl GripperConfiguration {
    pub fn tip(&self, finger: usize) -> Vec3 {
        self.nodes[finger][NODES_PER_FINGER - 1]
    }

    /// Midpoint between the fingertips, where held objects attach.
    pub fn grasp_point(&self) -> Vec3 {
        (self.tip(0) + self.tip(1)) * 0.5
    }

    /// Reflection about the Y-Z plane. The fingers swap roles so finger 0
    /// stays on the negative-X side.
    pub fn mirrored_x(&self) -> Self {
        let m = |v: &Vec3| Vec3::new(-v.x, v.y, v.z);
        let mut nodes = self.nodes;
        for f in 0..FINGERS {
            for j in 0..NODES_PER_FINGER {
                nodes[f][j] = m(&self.nodes[FINGERS - 1 - f][j]);
            }
        }
        Self {
            nodes,
            tip_displacement: [
                m(&self.tip_displacement[1]),
                m(&self.tip_displacement[0]),
            ],
            wrench: self.wrench.mirrored_x(),
        }
    }

    pub fn max_node_displacement(&self, rest: &Skeleton) -> f64 {
        let mut m: f64 = 0.0;
        for f in 0..FINGERS {
            for j in 0..NODES_PER_FINGER {
                m = m.max((self.nodes[f][j] - rest[f][j]).norm());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_model() -> GripperModel {
        let c = Matrix6::identity() * 1e-3;
        GripperModel::new(GripperKind::TendonActuated, c, 0.5, 1.0).unwrap()
    }

    #[test]
    fn zero_wrench_is_rest() {
        let m = GripperModel::tendon_actuated();
        let cfg = m.deform(&Wrench::ZERO);
        assert_eq!(cfg.nodes, *m.rest());
    }

    #[test]
    fn identity_compliance_unit_force() {
        let m = identity_model();
        let cfg = m.deform(&Wrench::from_array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        for f in 0..FINGERS {
            let d = cfg.tip(f) - m.rest()[f][3];
            assert!((d.x - 1e-3).abs() < 1e-15);
            assert!(d.y.abs() < 1e-15 && d.z.abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_node_profile() {
        let m = identity_model();
        let cfg = m.deform(&Wrench::from_array([0.0, 9.0, 0.0, 0.0, 0.0, 0.0]));
        let d1 = cfg.nodes[0][1] - m.rest()[0][1];
        let d2 = cfg.nodes[0][2] - m.rest()[0][2];
        assert!((d1.y - 9e-3 / 9.0).abs() < 1e-15);
        assert!((d2.y - 9e-3 * 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(cfg.nodes[0][0], m.rest()[0][0]);
    }

    #[test]
    fn linear_below_clamp() {
        let m = GripperModel::tendon_actuated();
        let w = Wrench::from_array([0.5, -0.3, 0.8, 0.02, -0.01, 0.015]);
        let base = m.deform(&w);
        for a in [0.5, 2.0] {
            let scaled = m.deform(&w.scale(a));
            for f in 0..FINGERS {
                let lhs = scaled.tip_displacement[f];
                let rhs = base.tip_displacement[f] * a;
                assert!((lhs - rhs).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn clamp_limits_displacement() {
        let m = GripperModel::tendon_actuated();
        let cfg = m.deform(&Wrench::from_array([100.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(cfg.max_node_displacement(m.rest()) <= m.max_deflection() + 1e-15);
    }

    #[test]
    fn rejects_non_spd() {
        let mut c = Matrix6::identity() * 1e-3;
        c[(2, 2)] = -1e-3;
        assert!(GripperModel::new(GripperKind::Pneumatic, c, 0.5, 0.01).is_err());
        let mut c = Matrix6::identity() * 1e-3;
        c[(0, 1)] = 1e-4;
        assert!(GripperModel::new(GripperKind::Pneumatic, c, 0.5, 0.01).is_err());
    }

    #[test]
    fn pneumatic_is_softer() {
        let t = GripperModel::tendon_actuated();
        let p = GripperModel::pneumatic();
        for i in 0..6 {
            assert!(p.compliance()[(i, i)] >= 2.0 * t.compliance()[(i, i)]);
        }
    }

    #[test]
    fn deform_commutes_with_mirror() {
        let m = GripperModel::tendon_actuated().with_aperture(0.4);
        let w = Wrench::from_array([1.2, -0.4, 2.0, 0.1, -0.05, 0.07]);
        let a = m.deform(&w).mirrored_x();
        let b = m.deform(&w.mirrored_x());
        for f in 0..FINGERS {
            for j in 0..NODES_PER_FINGER {
                assert!((a.nodes[f][j] - b.nodes[f][j]).norm() < 1e-15);
            }
        }
    }
}
