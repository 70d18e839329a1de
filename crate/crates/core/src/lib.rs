//! Simulated visual force/torque sensing for soft grippers.
//!
//! A quasi-static gripper and contact simulator produces ground-truth wrist
//! wrenches and deformed finger geometry, an eye-in-hand camera model renders
//! the gripper, and a small convolutional regressor learns to recover the
//! wrench from a single image. Baselines, metrics and three force-regulated
//! manipulation tasks sit on top.

pub mod baselines;
pub mod contact;
pub mod control;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod gripper;
pub mod image;
pub mod pose;
pub mod renderer;
pub mod rng;
pub mod wrench;

pub use error::{Error, Result};
pub use image::Image;
pub use pose::Pose;
pub use rng::Rng;
pub use wrench::{vector_projection, Vec3, Wrench};
