//! Training-time image augmentation.

use crate::image::Image;
use crate::rng::Rng;
use crate::wrench::Wrench;

/// Mirrors the image about its vertical centerline with probability 0.5 and
/// reflects the wrench accordingly.
pub fn augment_flip(image: &Image, wrench: &Wrench, rng: &mut Rng) -> (Image, Wrench) {
    if rng.coin(0.5) {
        flip(image, wrench)
    } else {
        (image.clone(), *wrench)
    }
}

pub fn flip(image: &Image, wrench: &Wrench) -> (Image, Wrench) {
    (image.flipped_horizontal(), wrench.mirrored_x())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotometricParams {
    /// Added to every channel.
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    /// Hue rotation in turns.
    pub hue: f64,
}

impl PhotometricParams {
    pub const IDENTITY: PhotometricParams = PhotometricParams {
        brightness: 0.0,
        contrast: 1.0,
        saturation: 1.0,
        hue: 0.0,
    };

    pub fn sample(rng: &mut Rng) -> Self {
        let log_range = 1.25f64.ln();
        Self {
            brightness: rng.uniform(-0.2, 0.2),
            contrast: rng.uniform(-log_range, log_range).exp(),
            saturation: rng.uniform(-log_range, log_range).exp(),
            hue: rng.uniform(-0.05, 0.05),
        }
    }

    /// Brightness, contrast, saturation, hue, then a clamp to [0, 1].
    pub fn apply(&self, image: &Image) -> Image {
        let mut px: Vec<f64> = image.pixels().iter().map(|&v| v as f64 + self.brightness).collect();
        if self.contrast != 1.0 {
            let mean = px.iter().sum::<f64>() / px.len() as f64;
            for v in px.iter_mut() {
                *v = mean + self.contrast * (*v - mean);
            }
        }
        let (sin, cos) = (self.hue * std::f64::consts::TAU).sin_cos();
        let k = 1.0 / 3.0f64.sqrt();
        for p in px.chunks_exact_mut(3) {
            let g = (p[0] + p[1] + p[2]) / 3.0;
            let mut c = [p[0] - g, p[1] - g, p[2] - g];
            for v in c.iter_mut() {
                *v *= self.saturation;
            }
            if self.hue != 0.0 {
                // rotation about the gray axis; c is orthogonal to it
                let cross = [k * (c[2] - c[1]), k * (c[0] - c[2]), k * (c[1] - c[0])];
                for i in 0..3 {
                    c[i] = c[i] * cos + cross[i] * sin;
                }
            }
            for i in 0..3 {
                p[i] = g + c[i];
            }
        }
        let pixels = px.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect();
        Image::from_pixels(image.width(), image.height(), pixels).expect("clamped pixels")
    }
}

pub fn augment_photometric(image: &Image, rng: &mut Rng) -> Image {
    PhotometricParams::sample(rng).apply(image)
}
