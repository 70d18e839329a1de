//! Scripted interaction rollouts, sensor modeling and on-disk datasets.

mod generate;
mod io;
mod sensor;

use std::fmt;
use std::str::FromStr;

pub use generate::{
    generate_dataset, generate_primitive, DatasetConfig, GenerationSettings, DEFAULT_ENVIRONMENTS,
};
pub use io::{
    load_samples, load_sequence, save_sequence, split_by_environment, Manifest, Sample,
    SequenceDescriptor, CSV_HEADER, MANIFEST_FILE, MANIFEST_VERSION,
};
pub use sensor::{
    apply_sensor_model, synchronize, tare, EffortModel, SensorNoise, EFFORT_KERNEL,
};

use crate::error::{Error, Result};
use crate::gripper::GripperKind;
use crate::image::Image;
use crate::pose::Pose;
use crate::wrench::Wrench;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Primitive {
    Push,
    Slide,
    Grasp,
    ManipulateObject,
    ManipulateScene,
}

impl Primitive {
    pub const ALL: [Primitive; 5] = [
        Primitive::Push,
        Primitive::Slide,
        Primitive::Grasp,
        Primitive::ManipulateObject,
        Primitive::ManipulateScene,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Primitive::Push => "push",
            Primitive::Slide => "slide",
            Primitive::Grasp => "grasp",
            Primitive::ManipulateObject => "manipulate_object",
            Primitive::ManipulateScene => "manipulate_scene",
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Primitive {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown primitive `{s}`")))
    }
}

/// One synchronized camera/sensor sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    /// Relative to the dataset root.
    pub image_path: String,
    /// Tared sensor reading.
    pub wrench: Wrench,
    pub effort: [f64; 6],
    pub pose: Pose,
    pub env_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecording {
    pub id: String,
    pub primitive: Primitive,
    pub env_id: String,
    pub gripper: GripperKind,
    pub seed: u64,
    pub frames: Vec<Frame>,
    /// One image per frame, same order.
    pub images: Vec<Image>,
}

impl SequenceRecording {
    pub fn wrenches(&self) -> Vec<Wrench> {
        self.frames.iter().map(|f| f.wrench).collect()
    }

    pub fn descriptor(&self) -> SequenceDescriptor {
        SequenceDescriptor {
            seq_id: self.id.clone(),
            primitive: self.primitive,
            env_id: self.env_id.clone(),
            n_frames: self.frames.len(),
            seed: self.seed,
        }
    }
}

/// Rounds to the 9 significant digits used by the text formats, so values
/// survive a save/load cycle bit for bit.
pub fn quantize(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_is_stable() {
        for x in [0.0, 1.0 / 3.0, -2.5e-7, 123456.789123, f64::MIN_POSITIVE] {
            let q = quantize(x);
            assert_eq!(quantize(q), q);
            assert_eq!(format_value(q).parse::<f64>().unwrap(), q);
        }
    }

    #[test]
    fn primitive_names_round_trip() {
        for p in Primitive::ALL {
            assert_eq!(p.as_str().parse::<Primitive>().unwrap(), p);
        }
        assert!("wave".parse::<Primitive>().is_err());
    }
}
