//! Loss, torque weighting, Adam training loop and gradient verification.

use std::str::FromStr;

use rayon::prelude::*;

use super::augment::{augment_flip, PhotometricParams};
use super::network::{RegressionModel, OUTPUTS};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;
use crate::wrench::Wrench;

/// `||F - F̂||² + c·||T - T̂||²`.
pub fn loss(estimate: &Wrench, truth: &Wrench, c: f64) -> f64 {
    (estimate.force - truth.force).norm_squared() + c * (estimate.torque - truth.torque).norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorqueWeightMode {
    /// Ratio of the standard deviations of force and torque norms.
    NormStd,
    /// Ratio of the mean per-axis standard deviations.
    AxisStd,
    /// Square of the norm ratio.
    VarianceRatio,
}

impl TorqueWeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TorqueWeightMode::NormStd => "norm_std",
            TorqueWeightMode::AxisStd => "axis_std",
            TorqueWeightMode::VarianceRatio => "variance_ratio",
        }
    }
}

impl FromStr for TorqueWeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Self::NormStd, Self::AxisStd, Self::VarianceRatio]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown torque weight mode `{s}`")))
    }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Loss weight c for the torque term.
pub fn torque_weight(wrenches: &[Wrench], mode: TorqueWeightMode) -> Result<f64> {
    if wrenches.len() < 2 {
        return Err(Error::Empty("torque weight needs at least two samples"));
    }
    let (sf, st) = match mode {
        TorqueWeightMode::NormStd | TorqueWeightMode::VarianceRatio => (
            std_dev(wrenches.iter().map(|w| w.force.norm())),
            std_dev(wrenches.iter().map(|w| w.torque.norm())),
        ),
        TorqueWeightMode::AxisStd => {
            let axis = |i: usize| std_dev(wrenches.iter().map(move |w| w.to_array()[i]));
            ((0..3).map(axis).sum::<f64>() / 3.0, (3..6).map(axis).sum::<f64>() / 3.0)
        }
    };
    if !(st > 0.0) {
        return Err(Error::DegenerateTorque);
    }
    let ratio = sf / st;
    Ok(if mode == TorqueWeightMode::VarianceRatio {
        ratio * ratio
    } else {
        ratio
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    /// Fixed c; computed from the training wrenches when `None`.
    pub torque_weight: Option<f64>,
    pub torque_weight_mode: TorqueWeightMode,
    pub flip: bool,
    pub photometric: bool,
    /// Map the head through the training mean and per-axis std.
    pub normalize_outputs: bool,
    /// Multiplier on the per-axis std in that map. Widens the range the
    /// head reaches within a short run.
    pub output_gain: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 4,
            iterations: 20_000,
            torque_weight: None,
            torque_weight_mode: TorqueWeightMode::NormStd,
            flip: true,
            photometric: true,
            normalize_outputs: true,
            output_gain: 3.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.output_gain > 0.0) || !self.output_gain.is_finite() {
            return Err(Error::Config("output gain must be finite and > 0".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if let Some(c) = self.torque_weight {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Config("torque weight c must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Loss of one sample and d(loss)/d(params).
pub fn loss_and_gradient(model: &RegressionModel, input: &[f64], truth: &Wrench, c: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.parameters().len()];
    let act = model.forward(input);
    let t = truth.to_array();
    let mut d_out = [0.0; OUTPUTS];
    let mut total = 0.0;
    for i in 0..OUTPUTS {
        let weight = if i < 3 { 1.0 } else { c };
        let e = act.output[i] - t[i];
        total += weight * e * e;
        d_out[i] = 2.0 * weight * e;
    }
    model.backward(input, &act, &d_out, &mut grad);
    (total, grad)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RegressionModel,
    /// Mean batch loss per iteration.
    pub loss_curve: Vec<f64>,
    pub torque_weight: f64,
}

fn prepare(model: &RegressionModel, sample: &Sample, config: &TrainConfig, rng: &mut Rng) -> Result<(Vec<f64>, Wrench)> {
    let mut image = sample.to_image();
    let mut wrench = sample.wrench;
    if config.flip {
        (image, wrench) = augment_flip(&image, &wrench, rng);
    }
    if config.photometric {
        image = PhotometricParams::sample(rng).apply(&image);
    }
    Ok((model.input_from_image(&image)?, wrench))
}

/// Per-axis mean and standard deviation of the training wrenches.
pub fn wrench_statistics(wrenches: &[Wrench]) -> ([f64; OUTPUTS], [f64; OUTPUTS]) {
    let mut mean = [0.0; OUTPUTS];
    let mut std = [0.0; OUTPUTS];
    for i in 0..OUTPUTS {
        mean[i] = wrenches.iter().map(|w| w.to_array()[i]).sum::<f64>() / wrenches.len() as f64;
        std[i] = std_dev(wrenches.iter().map(move |w| w.to_array()[i]));
    }
    (mean, std)
}

/// Minibatch Adam on the weighted wrench loss. Each sample gets its own
/// augmentation stream, so results do not depend on thread scheduling.
pub fn train(mut model: RegressionModel, samples: &[Sample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let wrenches: Vec<Wrench> = samples.iter().map(|s| s.wrench).collect();
    let c = match config.torque_weight {
        Some(c) => c,
        None => torque_weight(&wrenches, config.torque_weight_mode)?,
    };
    let (mean, std) = if wrenches.len() > 1 {
        wrench_statistics(&wrenches)
    } else {
        (wrenches[0].to_array(), [1.0; OUTPUTS])
    };
    if config.normalize_outputs {
        model.output_offset = mean;
        model.output_scale = std.map(|s| config.output_gain * if s > 1e-9 { s } else { 1.0 });
        model.set_head_bias([0.0; OUTPUTS]);
    } else {
        model.set_head_bias(mean);
    }

    let root = Rng::new(config.seed);
    let mut batch_rng = root.child("batch");
    let aug_root = root.child("augment");
    let mut adam = Adam::new(model.parameters().len());
    let mut curve = Vec::with_capacity(config.iterations);
    let scale = 1.0 / config.batch_size as f64;

    for it in 0..config.iterations {
        let picks: Vec<usize> = (0..config.batch_size).map(|_| batch_rng.below(samples.len())).collect();
        let results: Vec<Result<(f64, Vec<f64>)>> = picks
            .par_iter()
            .enumerate()
            .map(|(b, &idx)| {
                let mut rng = aug_root.child_index("sample", (it * config.batch_size + b) as u64);
                let (input, truth) = prepare(&model, &samples[idx], config, &mut rng)?;
                Ok(loss_and_gradient(&model, &input, &truth, c))
            })
            .collect();
        let mut grad = vec![0.0; model.parameters().len()];
        let mut batch_loss = 0.0;
        for r in results {
            let (l, g) = r?;
            batch_loss += l * scale;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b * scale;
            }
        }
        if !batch_loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                loss: batch_loss,
            });
        }
        curve.push(batch_loss);
        adam.step(model.parameters_mut(), &grad, config.learning_rate);
        if it % 1000 == 0 {
            log::debug!("iteration {it}: loss {batch_loss:.5}");
        }
    }
    Ok(TrainOutcome {
        model,
        loss_curve: curve,
        torque_weight: c,
    })
}

/// Largest relative error between analytic and central-difference gradients
/// over a random 50-parameter subset, drawn evenly from every tensor.
pub fn gradient_check(model: &RegressionModel, image: &Image, truth: &Wrench, c: f64, rng: &mut Rng) -> Result<f64> {
    gradient_check_with_fault(model, image, truth, c, rng, 1.0)
}

/// Same as [`gradient_check`] with the analytic head gradient multiplied by
/// `head_fault`, to confirm that the check notices a wrong gradient.
pub fn gradient_check_with_fault(
    model: &RegressionModel,
    image: &Image,
    truth: &Wrench,
    c: f64,
    rng: &mut Rng,
    head_fault: f64,
) -> Result<f64> {
    const STEP: f64 = 1e-4;
    const SUBSET: usize = 50;
    let input = model.input_from_image(image)?;
    let (_, mut grad) = loss_and_gradient(model, &input, truth, c);
    for g in &mut grad[model.head_range()] {
        *g *= head_fault;
    }
    let sizes = model.architecture().tensor_sizes();
    let per_tensor = SUBSET / sizes.len();
    let mut chosen = Vec::with_capacity(SUBSET);
    let mut offset = 0;
    for &size in &sizes {
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < per_tensor.min(size) {
            let i = offset + rng.below(size);
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        chosen.extend(picked);
        offset += size;
    }

    let loss_at = |i: usize, delta: f64| {
        let mut m = model.clone();
        m.parameters_mut()[i] += delta;
        let out = Wrench::from_array(m.forward(&input).output);
        loss(&out, truth, c)
    };
    let mut worst: f64 = 0.0;
    for i in chosen {
        let numeric = (loss_at(i, STEP) - loss_at(i, -STEP)) / (2.0 * STEP);
        let rel = (grad[i] - numeric).abs() / numeric.abs().max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::network::Architecture;

    #[test]
    fn loss_examples() {
        let truth = Wrench::from_array([0.5, -1.0, 2.0, 0.1, 0.2, 0.3]);
        assert_eq!(loss(&truth, &truth, 3.0), 0.0);
        let est = truth + Wrench::from_array([1.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        assert!((loss(&est, &truth, 2.0) - 1.5).abs() < 1e-12);
        let moved = truth + Wrench::from_array([0.0, 0.0, 1.0, 0.0, 0.5, 0.0]);
        assert!((loss(&moved, &truth, 2.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn torque_weight_examples() {
        let mut rng = Rng::new(4);
        let ws: Vec<Wrench> = (0..500)
            .map(|_| {
                Wrench::from_array([
                    rng.gaussian(2.0),
                    rng.gaussian(1.0),
                    rng.gaussian(3.0),
                    rng.gaussian(0.2),
                    rng.gaussian(0.1),
                    rng.gaussian(0.3),
                ])
            })
            .collect();
        let c = torque_weight(&ws, TorqueWeightMode::NormStd).unwrap();
        let scaled: Vec<Wrench> = ws.iter().map(|w| Wrench::new(w.force, w.torque * 10.0)).collect();
        let c10 = torque_weight(&scaled, TorqueWeightMode::NormStd).unwrap();
        assert!((c / c10 - 10.0).abs() < 1e-9);
        let v = torque_weight(&ws, TorqueWeightMode::VarianceRatio).unwrap();
        assert!((v - c * c).abs() < 1e-9);
        assert!(torque_weight(&ws, TorqueWeightMode::AxisStd).unwrap() > 0.0);

        let same = vec![Wrench::from_array([1.0, 2.0, 3.0, 0.1, 0.1, 0.1]); 5];
        let err = torque_weight(&same, TorqueWeightMode::NormStd).unwrap_err();
        assert_eq!(err.to_string(), "degenerate torque distribution");
        assert!(torque_weight(&same[..1], TorqueWeightMode::NormStd).is_err());
    }

    #[test]
    fn head_bias_gradient_closed_form() {
        let arch = Architecture::default();
        let n = arch.parameter_count();
        let mut model = RegressionModel::from_parameters(arch, vec![0.0; n]).unwrap();
        let bias = [0.3, -0.2, 1.0, 0.05, -0.01, 0.02];
        model.set_head_bias(bias);
        let image = Image::filled(64, 64, [0.0; 3]);
        let input = model.input_from_image(&image).unwrap();
        let truth = Wrench::from_array([1.0, 1.0, -1.0, 0.0, 0.1, 0.1]);
        let c = 2.5;
        let (_, grad) = loss_and_gradient(&model, &input, &truth, c);
        let t = truth.to_array();
        for i in 0..OUTPUTS {
            let w = if i < 3 { 1.0 } else { c };
            assert!((grad[n - OUTPUTS + i] - 2.0 * w * (bias[i] - t[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(12);
        let mut model = RegressionModel::new(Architecture::default(), &mut rng).unwrap();
        model.output_offset = [0.1, -0.2, 1.0, 0.0, 0.01, 0.0];
        model.output_scale = [1.5, 0.8, 2.5, 0.3, 0.05, 0.1];
        let px = (0..64 * 64 * 3).map(|_| rng.uniform(0.0, 1.0) as f32).collect();
        let image = Image::from_pixels(64, 64, px).unwrap();
        let truth = Wrench::from_array([1.0, -0.5, 3.0, 0.2, -0.05, 0.1]);
        let err = gradient_check(&model, &image, &truth, 8.0, &mut rng).unwrap();
        assert!(err < 1e-4, "{err}");
        let bad = gradient_check_with_fault(&model, &image, &truth, 8.0, &mut rng, 2.0).unwrap();
        assert!(bad > 0.5, "{bad}");
    }
}
