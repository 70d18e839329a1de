//! Force/torque sensor and motor-effort models.

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::wrench::{Vec3, Wrench};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    pub force_sigma: f64,
    pub torque_sigma: f64,
    /// Random-walk increment per sample.
    pub force_drift: f64,
    pub torque_drift: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            force_sigma: 0.05,
            torque_sigma: 0.005,
            force_drift: 0.002,
            torque_drift: 0.0002,
        }
    }
}

impl SensorNoise {
    pub fn none() -> Self {
        Self {
            force_sigma: 0.0,
            torque_sigma: 0.0,
            force_drift: 0.0,
            torque_drift: 0.0,
        }
    }
}

fn gaussian3(rng: &mut Rng, sigma: f64) -> Vec3 {
    Vec3::new(rng.gaussian(sigma), rng.gaussian(sigma), rng.gaussian(sigma))
}

/// White noise plus a drift that accumulates over the stream.
pub fn apply_sensor_model(raw: &[Wrench], noise: &SensorNoise, rng: &mut Rng) -> Result<Vec<Wrench>> {
    if raw.is_empty() {
        return Err(Error::Empty("wrench stream"));
    }
    let mut drift = Wrench::ZERO;
    Ok(raw
        .iter()
        .map(|w| {
            drift = drift
                + Wrench::new(
                    gaussian3(rng, noise.force_drift),
                    gaussian3(rng, noise.torque_drift),
                );
            let white = Wrench::new(
                gaussian3(rng, noise.force_sigma),
                gaussian3(rng, noise.torque_sigma),
            );
            *w + drift + white
        })
        .collect())
}

/// Subtracts the first reading from every reading.
pub fn tare(stream: &[Wrench]) -> Result<Vec<Wrench>> {
    let first = *stream.first().ok_or(Error::Empty("sequence"))?;
    Ok(stream.iter().map(|w| *w - first).collect())
}

/// Pairs every image with the nearest wrench sample. Equal distances (within
/// a nanosecond) resolve to the earlier sample; images farther than one image
/// period from any wrench are dropped. Returns `(image index, wrench index)`.
pub fn synchronize(image_times: &[f64], image_rate: f64, wrench_times: &[f64]) -> Vec<(usize, usize)> {
    const TIE: f64 = 1e-9;
    if image_times.is_empty() || wrench_times.is_empty() {
        return Vec::new();
    }
    let period = 1.0 / image_rate;
    let mut pairs = Vec::with_capacity(image_times.len());
    let mut j = 0usize;
    for (i, &t) in image_times.iter().enumerate() {
        while j + 1 < wrench_times.len() && wrench_times[j + 1] <= t {
            j += 1;
        }
        let mut best = j;
        if j + 1 < wrench_times.len() {
            let d_lo = (t - wrench_times[j]).abs();
            let d_hi = (wrench_times[j + 1] - t).abs();
            if d_hi < d_lo - TIE {
                best = j + 1;
            }
        }
        if (wrench_times[best] - t).abs() <= period {
            pairs.push((i, best));
        }
    }
    pairs
}

/// Wrench direction the efforts cannot see: a lateral (X) force applied at
/// the fingertip center, with its moment about the wrist.
pub const EFFORT_KERNEL: [f64; 6] = [1.0, 0.0, 0.0, 0.0, -0.04, -0.09];

/// Affine map from wrist wrench to the six actuator efforts (wrist roll,
/// wrist pitch, wrist yaw, gripper, telescoping arm, arm lift).
#[derive(Debug, Clone, PartialEq)]
pub struct EffortModel {
    pub matrix: Matrix6<f64>,
    pub offset: Vector6<f64>,
    pub noise_sigma: f64,
}

impl EffortModel {
    /// Full-rank actuator gains: rows are actuators, columns wrench axes.
    /// Wrist loads move the motor currents only slightly, so the effort
    /// noise dominates most channels.
    pub fn actuator_gains() -> Matrix6<f64> {
        Matrix6::from_row_slice(&[
            // roll
            0.0, 0.0, 0.0, 0.0, 0.2, 0.03, //
            // pitch
            0.0, 0.0, 0.005, 0.2, 0.0, 0.0, //
            // yaw
            0.01, 0.0, 0.0, 0.0, 0.0, 0.2, //
            // gripper
            0.01, 0.0, 0.0, 0.0, 0.0, 0.0, //
            // telescoping arm
            0.0, 0.025, 0.0, 0.0, 0.0, 0.0, //
            // lift
            0.0, 0.0, 0.025, 0.0, 0.0, 0.0, //
        ])
    }

    pub fn default_offset() -> Vector6<f64> {
        Vector6::new(0.3, -0.2, 0.1, 0.5, 0.05, 1.2)
    }

    /// Rank-5 model: actuator gains composed with the projector that removes
    /// [`EFFORT_KERNEL`].
    pub fn rank_deficient() -> Self {
        let k = Vector6::from_row_slice(&EFFORT_KERNEL).normalize();
        let projector = Matrix6::identity() - k * k.transpose();
        Self {
            matrix: Self::actuator_gains() * projector,
            offset: Self::default_offset(),
            noise_sigma: 0.1,
        }
    }

    pub fn full_rank() -> Self {
        Self {
            matrix: Self::actuator_gains(),
            offset: Self::default_offset(),
            noise_sigma: 0.1,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self
    }

    pub fn kernel_direction() -> [f64; 6] {
        let k = Vector6::from_row_slice(&EFFORT_KERNEL).normalize();
        [k[0], k[1], k[2], k[3], k[4], k[5]]
    }

    pub fn simulate(&self, w: &Wrench, rng: &mut Rng) -> [f64; 6] {
        let e = self.matrix * Vector6::from_row_slice(&w.to_array()) + self.offset;
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            *o = e[i] + if self.noise_sigma > 0.0 { rng.gaussian(self.noise_sigma) } else { 0.0 };
        }
        out
    }
}
