//! Small convolutional regressor with hand-written backpropagation.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;
use crate::wrench::Wrench;

pub const OUTPUTS: usize = 6;
const KERNEL: usize = 3;

/// Layer stack description; fixes the parameter count and layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input: usize,
    pub channels: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input: 64,
            channels: vec![8, 16, 32, 64],
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch: Vec<String> = self.channels.iter().map(|c| c.to_string()).collect();
        write!(
            f,
            "conv3x3s2-tanh input={} channels={} pool=mean head={OUTPUTS}",
            self.input,
            ch.join(",")
        )
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized architecture `{s}`"));
        let mut input = None;
        let mut channels = None;
        let mut words = s.split_whitespace();
        if words.next() != Some("conv3x3s2-tanh") {
            return Err(bad());
        }
        for w in words {
            match w.split_once('=') {
                Some(("input", v)) => input = v.parse().ok(),
                Some(("channels", v)) => {
                    channels = v.split(',').map(|c| c.parse().ok()).collect::<Option<Vec<usize>>>()
                }
                Some(("pool", "mean")) => {}
                Some(("head", v)) if v == OUTPUTS.to_string() => {}
                _ => return Err(bad()),
            }
        }
        let arch = Self {
            input: input.ok_or_else(bad)?,
            channels: channels.ok_or_else(bad)?,
        };
        arch.validate()?;
        Ok(arch)
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::Config("architecture needs nonzero channel counts".into()));
        }
        if self.input == 0 || self.input % (1 << self.channels.len()) != 0 {
            return Err(Error::Config(format!(
                "input size {} must be divisible by 2^{}",
                self.input,
                self.channels.len()
            )));
        }
        Ok(())
    }

    fn layers(&self) -> Vec<ConvShape> {
        let mut cin = 3;
        let mut size = self.input;
        self.channels
            .iter()
            .map(|&cout| {
                let l = ConvShape {
                    cin,
                    cout,
                    in_size: size,
                };
                cin = cout;
                size /= 2;
                l
            })
            .collect()
    }

    fn features(&self) -> usize {
        *self.channels.last().expect("validated")
    }

    /// Sizes of the parameter tensors in layout order: per stage weights then
    /// bias, then head weights and head bias.
    pub fn tensor_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for l in self.layers() {
            sizes.push(l.cout * l.cin * KERNEL * KERNEL);
            sizes.push(l.cout);
        }
        sizes.push(OUTPUTS * self.features());
        sizes.push(OUTPUTS);
        sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.tensor_sizes().iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvShape {
    cin: usize,
    cout: usize,
    in_size: usize,
}

impl ConvShape {
    fn out_size(&self) -> usize {
        self.in_size / 2
    }

    fn weight_count(&self) -> usize {
        self.cout * self.cin * KERNEL * KERNEL
    }
}

/// Output columns `ox` with `0 <= 2*ox + k - 1 < n`.
fn valid_range(k: usize, n: usize, out: usize) -> std::ops::Range<usize> {
    let lo = if k == 0 { 1 } else { 0 };
    let hi = ((n - k) / 2 + 1).min(out);
    lo..hi
}

fn conv_forward(shape: &ConvShape, w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    let n = shape.in_size;
    let m = shape.out_size();
    for co in 0..shape.cout {
        let plane = &mut out[co * m * m..(co + 1) * m * m];
        plane.fill(b[co]);
        for ci in 0..shape.cin {
            let src = &input[ci * n * n..(ci + 1) * n * n];
            for ky in 0..KERNEL {
                let ys = valid_range(ky, n, m);
                for kx in 0..KERNEL {
                    let wv = w[((co * shape.cin + ci) * KERNEL + ky) * KERNEL + kx];
                    let xs = valid_range(kx, n, m);
                    for oy in ys.clone() {
                        let iy = 2 * oy + ky - 1;
                        let row = &src[iy * n..(iy + 1) * n];
                        let dst = &mut plane[oy * m..(oy + 1) * m];
                        for ox in xs.clone() {
                            dst[ox] += wv * row[2 * ox + kx - 1];
                        }
                    }
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v = v.tanh();
    }
}

/// `d_pre` is the gradient at the pre-activation. Accumulates weight/bias
/// gradients and, when requested, writes the input gradient.
fn conv_backward(
    shape: &ConvShape,
    w: &[f64],
    input: &[f64],
    d_pre: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    mut d_input: Option<&mut [f64]>,
) {
    let n = shape.in_size;
    let m = shape.out_size();
    if let Some(d) = d_input.as_deref_mut() {
        d.fill(0.0);
    }
    for co in 0..shape.cout {
        let plane = &d_pre[co * m * m..(co + 1) * m * m];
        gb[co] += plane.iter().sum::<f64>();
        for ci in 0..shape.cin {
            let src = &input[ci * n * n..(ci + 1) * n * n];
            for ky in 0..KERNEL {
                let ys = valid_range(ky, n, m);
                for kx in 0..KERNEL {
                    let idx = ((co * shape.cin + ci) * KERNEL + ky) * KERNEL + kx;
                    let xs = valid_range(kx, n, m);
                    let mut acc = 0.0;
                    for oy in ys.clone() {
                        let iy = 2 * oy + ky - 1;
                        let row = &src[iy * n..(iy + 1) * n];
                        let g = &plane[oy * m..(oy + 1) * m];
                        for ox in xs.clone() {
                            acc += g[ox] * row[2 * ox + kx - 1];
                        }
                    }
                    gw[idx] += acc;
                    if let Some(d) = d_input.as_deref_mut() {
                        let wv = w[idx];
                        let dst = &mut d[ci * n * n..(ci + 1) * n * n];
                        for oy in ys.clone() {
                            let iy = 2 * oy + ky - 1;
                            let g = &plane[oy * m..(oy + 1) * m];
                            let row = &mut dst[iy * n..(iy + 1) * n];
                            for ox in xs.clone() {
                                row[2 * ox + kx - 1] += wv * g[ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Image-to-wrench regressor. The head output is mapped through a fixed
/// per-axis affine `offset + scale * z`, identity unless set by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    arch: Architecture,
    params: Vec<f64>,
    pub output_offset: [f64; OUTPUTS],
    pub output_scale: [f64; OUTPUTS],
}

/// Per-sample intermediate values kept for the backward pass.
pub struct Activations {
    layers: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    pub output: [f64; OUTPUTS],
}

impl RegressionModel {
    /// He-uniform weights, zero biases.
    pub fn new(arch: Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let mut params = Vec::with_capacity(arch.parameter_count());
        for l in arch.layers() {
            let bound = (6.0 / (l.cin * KERNEL * KERNEL) as f64).sqrt();
            params.extend((0..l.weight_count()).map(|_| rng.uniform(-bound, bound)));
            params.extend(std::iter::repeat_n(0.0, l.cout));
        }
        let bound = (6.0 / arch.features() as f64).sqrt();
        params.extend((0..OUTPUTS * arch.features()).map(|_| rng.uniform(-bound, bound)));
        params.extend([0.0; OUTPUTS]);
        Ok(Self {
            arch,
            params,
            output_offset: [0.0; OUTPUTS],
            output_scale: [1.0; OUTPUTS],
        })
    }

    pub fn from_parameters(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.parameter_count() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: arch.parameter_count(),
            });
        }
        Ok(Self {
            arch,
            params,
            output_offset: [0.0; OUTPUTS],
            output_scale: [1.0; OUTPUTS],
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn head_range(&self) -> std::ops::Range<usize> {
        let n = self.params.len();
        n - OUTPUTS * (self.arch.features() + 1)..n
    }

    fn head_bias_range(&self) -> std::ops::Range<usize> {
        let n = self.params.len();
        n - OUTPUTS..n
    }

    pub fn head_bias(&self) -> &[f64] {
        &self.params[self.head_bias_range()]
    }

    pub fn set_head_bias(&mut self, bias: [f64; OUTPUTS]) {
        let r = self.head_bias_range();
        self.params[r].copy_from_slice(&bias);
    }

    pub fn zero_head(&mut self) {
        let r = self.head_range();
        self.params[r].fill(0.0);
    }

    /// Planar channel-major input in [-1, 1] from an image.
    pub fn input_from_image(&self, image: &Image) -> Result<Vec<f64>> {
        let n = self.arch.input;
        if image.width() != n || image.height() != n {
            return Err(Error::Resolution {
                expected: n,
                got_w: image.width(),
                got_h: image.height(),
            });
        }
        let mut x = vec![0.0; 3 * n * n];
        for (i, px) in image.pixels().chunks_exact(3).enumerate() {
            for c in 0..3 {
                x[c * n * n + i] = 2.0 * px[c] as f64 - 1.0;
            }
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Activations {
        let shapes = self.arch.layers();
        let mut layers: Vec<Vec<f64>> = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (li, s) in shapes.iter().enumerate() {
            let wn = s.weight_count();
            let (w, b) = (
                &self.params[offset..offset + wn],
                &self.params[offset + wn..offset + wn + s.cout],
            );
            offset += wn + s.cout;
            let m = s.out_size();
            let mut out = vec![0.0; s.cout * m * m];
            let src = if li == 0 { input } else { &layers[li - 1] };
            conv_forward(s, w, b, src, &mut out);
            layers.push(out);
        }
        let last = shapes.last().expect("validated");
        let area = (last.out_size() * last.out_size()) as f64;
        let top = layers.last().expect("validated");
        let pooled: Vec<f64> = top
            .chunks_exact(last.out_size() * last.out_size())
            .map(|c| c.iter().sum::<f64>() / area)
            .collect();
        let feats = pooled.len();
        let head_w = &self.params[offset..offset + OUTPUTS * feats];
        let head_b = &self.params[offset + OUTPUTS * feats..];
        let mut output = [0.0; OUTPUTS];
        for (o, out) in output.iter_mut().enumerate() {
            let z = head_b[o]
                + head_w[o * feats..(o + 1) * feats]
                    .iter()
                    .zip(&pooled)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            *out = self.output_offset[o] + self.output_scale[o] * z;
        }
        Activations {
            layers,
            pooled,
            output,
        }
    }

    /// Adds d(loss)/d(params) into `grad` given d(loss)/d(output).
    pub fn backward(&self, input: &[f64], act: &Activations, d_output: &[f64; OUTPUTS], grad: &mut [f64]) {
        let shapes = self.arch.layers();
        let feats = act.pooled.len();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for s in &shapes {
            offsets.push(offset);
            offset += s.weight_count() + s.cout;
        }
        let head_w = &self.params[offset..offset + OUTPUTS * feats];
        let mut d_pooled = vec![0.0; feats];
        for o in 0..OUTPUTS {
            let dz = d_output[o] * self.output_scale[o];
            for f in 0..feats {
                grad[offset + o * feats + f] += dz * act.pooled[f];
                d_pooled[f] += dz * head_w[o * feats + f];
            }
            grad[offset + OUTPUTS * feats + o] += dz;
        }

        let last = shapes.last().expect("validated");
        let area = last.out_size() * last.out_size();
        let mut d_out: Vec<f64> = (0..last.cout * area)
            .map(|i| d_pooled[i / area] / area as f64)
            .collect();
        for li in (0..shapes.len()).rev() {
            let s = &shapes[li];
            let y = &act.layers[li];
            for (d, v) in d_out.iter_mut().zip(y) {
                *d *= 1.0 - v * v;
            }
            let wn = s.weight_count();
            let o = offsets[li];
            let (gw, rest) = grad[o..o + wn + s.cout].split_at_mut(wn);
            let w = &self.params[o..o + wn];
            let src = if li == 0 { input } else { &act.layers[li - 1] };
            if li == 0 {
                conv_backward(s, w, src, &d_out, gw, rest, None);
            } else {
                let mut d_in = vec![0.0; s.cin * s.in_size * s.in_size];
                conv_backward(s, w, src, &d_out, gw, rest, Some(&mut d_in));
                d_out = d_in;
            }
        }
    }

    pub fn predict(&self, image: &Image) -> Result<Wrench> {
        let x = self.input_from_image(image)?;
        Ok(Wrench::from_array(self.forward(&x).output))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy_image(seed: u64) -> Image {
        let mut rng = Rng::new(seed);
        let px = (0..64 * 64 * 3).map(|_| rng.uniform(0.0, 1.0) as f32).collect();
        Image::from_pixels(64, 64, px).unwrap()
    }

    #[test]
    fn parameter_layout() {
        let arch = Architecture::default();
        let expected = (8 * 27 + 8) + (16 * 72 + 16) + (32 * 144 + 32) + (64 * 288 + 64) + (6 * 64 + 6);
        assert_eq!(arch.parameter_count(), expected);
        assert_eq!(arch.tensor_sizes().len(), 10);
        let m = RegressionModel::new(arch.clone(), &mut Rng::new(0)).unwrap();
        assert_eq!(m.parameters().len(), expected);
        assert_eq!(arch.to_string().parse::<Architecture>().unwrap(), arch);
        assert!("conv3x3s2-tanh input=60 channels=8,16,32,64".parse::<Architecture>().is_err());
    }

    #[test]
    fn valid_range_matches_brute_force() {
        for n in [4usize, 8, 64] {
            for k in 0..3 {
                let brute: Vec<usize> = (0..n / 2)
                    .filter(|&o| (2 * o + k) >= 1 && 2 * o + k - 1 < n)
                    .collect();
                assert_eq!(valid_range(k, n, n / 2).collect::<Vec<_>>(), brute, "n {n} k {k}");
            }
        }
    }

    #[test]
    fn zero_head_outputs_bias() {
        let mut m = RegressionModel::new(Architecture::default(), &mut Rng::new(1)).unwrap();
        m.zero_head();
        let bias = [0.5, -1.0, 2.0, 0.01, -0.02, 0.03];
        m.set_head_bias(bias);
        let w = m.predict(&noisy_image(3)).unwrap();
        assert_eq!(w.to_array(), bias);
    }

    #[test]
    fn identical_images_identical_outputs() {
        let m = RegressionModel::new(Architecture::default(), &mut Rng::new(2)).unwrap();
        let img = noisy_image(4);
        assert_eq!(m.predict(&img).unwrap(), m.predict(&img.clone()).unwrap());
    }

    #[test]
    fn wrong_resolution_is_rejected() {
        let m = RegressionModel::new(Architecture::default(), &mut Rng::new(2)).unwrap();
        let err = m.predict(&Image::filled(32, 32, [0.5; 3])).unwrap_err();
        assert!(matches!(err, Error::Resolution { expected: 64, .. }));
    }

    #[test]
    fn every_conv_weight_matters() {
        let m = RegressionModel::new(Architecture::default(), &mut Rng::new(5)).unwrap();
        let img = noisy_image(6);
        let base = m.predict(&img).unwrap();
        let sizes = m.architecture().tensor_sizes();
        let mut offset = 0;
        let mut rng = Rng::new(7);
        for (t, size) in sizes.iter().enumerate() {
            if t % 2 == 0 && t < 8 {
                for _ in 0..10 {
                    let i = offset + rng.below(*size);
                    let mut p = m.clone();
                    p.parameters_mut()[i] += 1e-2;
                    assert_ne!(p.predict(&img).unwrap(), base, "parameter {i}");
                }
            }
            offset += size;
        }
    }

    #[test]
    fn outputs_finite_on_random_images() {
        let m = RegressionModel::new(Architecture::default(), &mut Rng::new(8)).unwrap();
        for s in 0..1000 {
            let mut rng = Rng::new(s);
            let lo = rng.uniform(0.0, 0.5);
            let hi = rng.uniform(lo, 1.0);
            let px = (0..64 * 64 * 3).map(|_| rng.uniform(lo, hi) as f32).collect();
            let img = Image::from_pixels(64, 64, px).unwrap();
            assert!(m.predict(&img).unwrap().is_finite());
        }
    }
}
