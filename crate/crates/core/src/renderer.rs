//! Eye-in-hand camera model.
//!
//! The camera is rigidly attached to the wrist and looks along -Z at the
//! fingers. Projection is orthographic in the X-Y plane; depth only shows up
//! through the apparent size of the fingertip pads.

use crate::error::{Error, Result};
use crate::gripper::{GripperConfiguration, FINGERS, NODES_PER_FINGER};
use crate::image::Image;
use crate::rng::{hash_label, Rng};

const FINGER_RGB: [f32; 3] = [0.16, 0.17, 0.2];
const PAD_RGB: [f32; 3] = [0.92, 0.42, 0.12];
/// Half-width of a finger stroke, meters.
const FINGER_HALF_WIDTH: f64 = 0.0022;
/// Fingertip pad radius at rest, meters.
const PAD_RADIUS: f64 = 0.006;
/// Soft-edge width of each supersample, pixels.
const EDGE_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropWindow {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Raw sensor size before cropping.
    pub raw_width: usize,
    pub raw_height: usize,
    pub crop: CropWindow,
    /// Pixels per meter in the X-Y plane.
    pub scale: f64,
    /// Raw-image pixel the wrist origin projects to.
    pub principal_point: (f64, f64),
    /// Relative pad radius shrink per meter of +Z fingertip deflection.
    pub depth_gain: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            raw_width: 160,
            raw_height: 120,
            crop: CropWindow {
                x0: 48,
                y0: 30,
                width: 64,
                height: 64,
            },
            scale: 700.0,
            principal_point: (80.0, 103.0),
            depth_gain: 20.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::Config("camera scale must be positive".into()));
        }
        let c = &self.crop;
        if c.width == 0 || c.height == 0 || c.x0 + c.width > self.raw_width || c.y0 + c.height > self.raw_height {
            return Err(Error::Config("crop window outside raw image".into()));
        }
        if c.width != c.height {
            return Err(Error::Config("crop window must be square".into()));
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.crop.width
    }

    /// Horizontal offset of the optical center from the crop centerline.
    fn center_offset(&self) -> f64 {
        self.principal_point.0 - (self.crop.x0 as f64 + self.crop.width as f64 / 2.0)
    }

    /// Wrist-frame point to (column offset from crop centerline, row in crop).
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let u = self.center_offset() + self.scale * x;
        let v = (self.principal_point.1 - self.crop.y0 as f64) - self.scale * y;
        (u, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub id: String,
    pub palette: [[f32; 3]; 3],
    pub octaves: u32,
    /// Base noise cell size, pixels.
    pub noise_cell: f64,
    pub seed: u64,
    pub clutter_count: (usize, usize),
    /// Side length range of clutter rectangles, pixels.
    pub clutter_size: (f64, f64),
    pub lighting_gain: f64,
}

impl EnvironmentSpec {
    /// Procedural background whose look is fixed by the id alone.
    pub fn procedural(id: &str) -> Self {
        let seed = hash_label(id);
        let mut rng = Rng::new(seed);
        let mut color = |lo: f64, hi: f64| {
            let mut c = [0.0f32; 3];
            for ch in c.iter_mut() {
                *ch = rng.uniform(lo, hi) as f32;
            }
            c
        };
        let palette = [color(0.35, 0.75), color(0.45, 0.9), color(0.3, 0.8)];
        let octaves = 2 + rng.below(3) as u32;
        let noise_cell = rng.uniform(6.0, 18.0);
        let lighting_gain = rng.uniform(0.8, 1.2);
        let max_clutter = 1 + rng.below(4);
        Self {
            id: id.to_string(),
            palette,
            octaves,
            noise_cell,
            seed,
            clutter_count: (0, max_clutter),
            clutter_size: (4.0, 20.0),
            lighting_gain,
        }
    }

    /// Per-recording variation of the same place: palette, lighting and
    /// texture scale drift a little between visits.
    pub fn varied(&self, rng: &mut Rng) -> Self {
        let mut out = self.clone();
        for c in out.palette.iter_mut() {
            for ch in c.iter_mut() {
                *ch = (*ch + rng.uniform(-0.25, 0.25) as f32).clamp(0.05, 0.95);
            }
        }
        out.lighting_gain = (self.lighting_gain * rng.uniform(0.75, 1.25)).clamp(0.6, 1.4);
        out.noise_cell = self.noise_cell * rng.uniform(0.8, 1.25);
        out
    }

    /// Flat single-color background with no clutter.
    pub fn uniform(id: &str, rgb: [f32; 3]) -> Self {
        Self {
            id: id.to_string(),
            palette: [rgb; 3],
            octaves: 0,
            noise_cell: 8.0,
            seed: hash_label(id),
            clutter_count: (0, 0),
            clutter_size: (1.0, 1.0),
            lighting_gain: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.6..=1.4).contains(&self.lighting_gain) {
            return Err(Error::Config("lighting_gain outside [0.6, 1.4]".into()));
        }
        if self.clutter_count.0 > self.clutter_count.1 {
            return Err(Error::Config("clutter count range reversed".into()));
        }
        Ok(())
    }
}

fn lattice(seed: u64, octave: u32, ix: i64, iy: i64) -> f64 {
    let mut h = seed ^ (octave as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= (ix as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = h.rotate_left(29) ^ (iy as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^= h >> 31;
    h = h.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    h ^= h >> 32;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, octave: u32, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (x - fx, y - fy);
    let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
    let (ix, iy) = (fx as i64, fy as i64);
    let a = lattice(seed, octave, ix, iy);
    let b = lattice(seed, octave, ix + 1, iy);
    let c = lattice(seed, octave, ix, iy + 1);
    let d = lattice(seed, octave, ix + 1, iy + 1);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

fn mix(a: [f32; 3], b: [f32; 3], t: f32) -> [f32; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (p.0 - (a.0 + t * abx), p.1 - (a.1 + t * aby));
    (dx * dx + dy * dy).sqrt()
}

fn soft_coverage(half_width: f64, distance: f64) -> f64 {
    ((half_width - distance) / EDGE_WIDTH + 0.5).clamp(0.0, 1.0)
}

struct Projected {
    segments: Vec<((f64, f64), (f64, f64))>,
    pads: Vec<((f64, f64), f64)>,
    stroke_half_width: f64,
}

fn project_configuration(config: &GripperConfiguration, cam: &CameraModel) -> Projected {
    let mut segments = Vec::with_capacity(FINGERS * (NODES_PER_FINGER - 1));
    let mut pads = Vec::with_capacity(FINGERS);
    for f in 0..FINGERS {
        let nodes = &config.nodes[f];
        for j in 0..NODES_PER_FINGER - 1 {
            segments.push((
                cam.project(nodes[j].x, nodes[j].y),
                cam.project(nodes[j + 1].x, nodes[j + 1].y),
            ));
        }
        let tip = nodes[NODES_PER_FINGER - 1];
        let dz = config.tip_displacement[f].z;
        let radius = cam.scale * PAD_RADIUS * (1.0 - cam.depth_gain * dz).max(0.2);
        pads.push((cam.project(tip.x, tip.y), radius));
    }
    Projected {
        segments,
        pads,
        stroke_half_width: cam.scale * FINGER_HALF_WIDTH,
    }
}

fn background(env: &EnvironmentSpec, res: usize, rng: &mut Rng) -> Image {
    let mut img = Image::filled(res, res, env.palette[0]);
    if env.octaves > 0 {
        let (ox, oy) = (rng.uniform(0.0, 4096.0), rng.uniform(0.0, 4096.0));
        for y in 0..res {
            for x in 0..res {
                let (px, py) = (x as f64 + 0.5 + ox, y as f64 + 0.5 + oy);
                let mut total = 0.0;
                let mut norm = 0.0;
                let mut amp = 1.0;
                let mut cell = env.noise_cell;
                for o in 0..env.octaves {
                    total += amp * value_noise(env.seed, o, px / cell, py / cell);
                    norm += amp;
                    amp *= 0.5;
                    cell *= 0.5;
                }
                let t = (total / norm) as f32;
                let rgb = if t < 0.5 {
                    mix(env.palette[0], env.palette[1], t * 2.0)
                } else {
                    mix(env.palette[1], env.palette[2], (t - 0.5) * 2.0)
                };
                img.set(x, y, rgb);
            }
        }
    }
    let (lo, hi) = env.clutter_count;
    let count = if hi > lo { lo + rng.below(hi - lo + 1) } else { lo };
    for _ in 0..count {
        let w = rng.uniform(env.clutter_size.0, env.clutter_size.1);
        let h = rng.uniform(env.clutter_size.0, env.clutter_size.1);
        let x0 = rng.uniform(-w, res as f64);
        let y0 = rng.uniform(-h, res as f64);
        let base = env.palette[rng.below(3)];
        let shade = rng.uniform(0.5, 1.3) as f32;
        let rgb = [
            (base[0] * shade).clamp(0.0, 1.0),
            (base[1] * shade * 0.9).clamp(0.0, 1.0),
            (base[2] * shade * 1.1).clamp(0.0, 1.0),
        ];
        let xs = x0.max(0.0) as usize..((x0 + w).min(res as f64)).max(0.0) as usize;
        let ys = y0.max(0.0) as usize..((y0 + h).min(res as f64)).max(0.0) as usize;
        for y in ys {
            for x in xs.clone() {
                img.set(x, y, rgb);
            }
        }
    }
    img
}

/// Renders one camera frame. Output depends only on the inputs and the
/// generator state, which drives the background offset and clutter.
pub fn render(
    config: &GripperConfiguration,
    cam: &CameraModel,
    env: &EnvironmentSpec,
    rng: &mut Rng,
) -> Image {
    let res = cam.resolution();
    let mut img = background(env, res, rng);
    let proj = project_configuration(config, cam);
    let half = res as f64 / 2.0;
    const OFFSETS: [f64; 2] = [0.25, 0.75];

    for y in 0..res {
        for x in 0..res {
            let mut stroke = [[0.0f64; 2]; 2];
            let mut pad = [[0.0f64; 2]; 2];
            for (sy, oy) in OFFSETS.iter().enumerate() {
                for (sx, ox) in OFFSETS.iter().enumerate() {
                    // centered column coordinate keeps left/right mirroring exact
                    let p = ((x as f64 + ox) - half, y as f64 + oy);
                    let mut s: f64 = 0.0;
                    for (a, b) in &proj.segments {
                        s = s.max(soft_coverage(proj.stroke_half_width, segment_distance(p, *a, *b)));
                    }
                    let mut d: f64 = 0.0;
                    for (c, r) in &proj.pads {
                        let dist = ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2)).sqrt();
                        d = d.max(soft_coverage(*r, dist));
                    }
                    stroke[sy][sx] = s;
                    pad[sy][sx] = d;
                }
            }
            let a_s = ((stroke[0][0] + stroke[0][1]) + (stroke[1][0] + stroke[1][1])) / 4.0;
            let a_p = ((pad[0][0] + pad[0][1]) + (pad[1][0] + pad[1][1])) / 4.0;
            let mut rgb = img.get(x, y);
            rgb = mix(rgb, FINGER_RGB, a_s as f32);
            rgb = mix(rgb, PAD_RGB, a_p as f32);
            let g = env.lighting_gain as f32;
            img.set(
                x,
                y,
                [
                    (rgb[0] * g).clamp(0.0, 1.0),
                    (rgb[1] * g).clamp(0.0, 1.0),
                    (rgb[2] * g).clamp(0.0, 1.0),
                ],
            );
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gripper::GripperModel;
    use crate::wrench::{Vec3, Wrench};

    fn env() -> EnvironmentSpec {
        EnvironmentSpec::procedural("lab")
    }

    #[test]
    fn deterministic() {
        let m = GripperModel::tendon_actuated();
        let cfg = m.deform(&Wrench::from_array([1.0, 0.5, 2.0, 0.0, 0.0, 0.0]));
        let cam = CameraModel::default();
        let a = render(&cfg, &cam, &env(), &mut Rng::new(3));
        let b = render(&cfg, &cam, &env(), &mut Rng::new(3));
        assert_eq!(a, b);
    }

    #[test]
    fn lateral_deflection_moves_pixels_near_tips() {
        let m = GripperModel::tendon_actuated();
        let cam = CameraModel::default();
        let bg = EnvironmentSpec::uniform("flat", [0.6, 0.6, 0.6]);
        let rest = m.rest_configuration();
        let mut moved = rest.clone();
        for f in 0..FINGERS {
            moved.nodes[f][3] += Vec3::new(0.005, 0.0, 0.0);
        }
        let a = render(&rest, &cam, &bg, &mut Rng::new(0));
        let b = render(&moved, &cam, &bg, &mut Rng::new(0));
        assert!(a.mean_abs_diff(&b) > 0.0);
        let tip_row = cam.project(0.0, rest.tip(0).y).1;
        let mut near = 0.0;
        let mut far = 0.0;
        for y in 0..cam.resolution() {
            for x in 0..cam.resolution() {
                let d: f32 = (0..3).map(|c| (a.get(x, y)[c] - b.get(x, y)[c]).abs()).sum();
                if (y as f64 - tip_row).abs() < 12.0 {
                    near += d;
                } else {
                    far += d;
                }
            }
        }
        assert!(near > 4.0 * far);
    }

    #[test]
    fn environments_differ() {
        let cfg = GripperModel::tendon_actuated().rest_configuration();
        let cam = CameraModel::default();
        let a = render(&cfg, &cam, &EnvironmentSpec::procedural("lab"), &mut Rng::new(1));
        let b = render(&cfg, &cam, &EnvironmentSpec::procedural("home"), &mut Rng::new(1));
        assert!(a.mean_abs_diff(&b) > 0.01);
    }

    #[test]
    fn default_camera_is_valid() {
        CameraModel::default().validate().unwrap();
        let mut bad = CameraModel::default();
        bad.crop.x0 = 120;
        assert!(bad.validate().is_err());
    }
}
