//! Comparison methods: the training-mean predictor and an MLP on motor efforts.

use crate::error::{Error, Result};
use crate::estimator::{torque_weight, wrench_statistics, TorqueWeightMode};
use crate::rng::Rng;
use crate::wrench::Wrench;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanGuesser {
    pub mean: Wrench,
}

impl MeanGuesser {
    pub fn fit(train: &[Wrench]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let mean = train.iter().copied().sum::<Wrench>().scale(1.0 / train.len() as f64);
        Ok(Self { mean })
    }

    pub fn predict(&self) -> Wrench {
        self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffortMlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for EffortMlpConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            learning_rate: 1e-3,
            batch_size: 32,
            iterations: 20_000,
            seed: 0,
        }
    }
}

/// Two tanh hidden layers on standardized efforts. Outputs go through the
/// training mean and per-axis std.
#[derive(Debug, Clone, PartialEq)]
pub struct EffortMlp {
    pub input_mean: [f64; 6],
    /// Zero for constant channels, which are then ignored.
    pub input_inv_std: [f64; 6],
    pub output_mean: [f64; 6],
    pub output_std: [f64; 6],
    hidden: usize,
    /// w1 (h×6), b1, w2 (h×h), b2, w3 (6×h), b3.
    params: Vec<f64>,
}

struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

fn layout(h: usize) -> Layout {
    let w1 = 0;
    let b1 = w1 + h * 6;
    let w2 = b1 + h;
    let b2 = w2 + h * h;
    let w3 = b2 + h;
    let b3 = w3 + 6 * h;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        len: b3 + 6,
    }
}

struct Pass {
    x: [f64; 6],
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: [f64; 6],
}

impl EffortMlp {
    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn standardize(&self, e: &[f64; 6]) -> [f64; 6] {
        let mut x = [0.0; 6];
        for i in 0..6 {
            x[i] = (e[i] - self.input_mean[i]) * self.input_inv_std[i];
        }
        x
    }

    fn forward(&self, effort: &[f64; 6]) -> Pass {
        let h = self.hidden;
        let l = layout(h);
        let p = &self.params;
        let x = self.standardize(effort);
        let h1: Vec<f64> = (0..h)
            .map(|j| (p[l.b1 + j] + (0..6).map(|i| p[l.w1 + j * 6 + i] * x[i]).sum::<f64>()).tanh())
            .collect();
        let h2: Vec<f64> = (0..h)
            .map(|j| (p[l.b2 + j] + (0..h).map(|i| p[l.w2 + j * h + i] * h1[i]).sum::<f64>()).tanh())
            .collect();
        let mut out = [0.0; 6];
        for o in 0..6 {
            let z = p[l.b3 + o] + (0..h).map(|i| p[l.w3 + o * h + i] * h2[i]).sum::<f64>();
            out[o] = self.output_mean[o] + self.output_std[o] * z;
        }
        Pass { x, h1, h2, out }
    }

    pub fn predict(&self, effort: &[f64; 6]) -> Wrench {
        Wrench::from_array(self.forward(effort).out)
    }

    fn backward(&self, pass: &Pass, d_out: &[f64; 6], grad: &mut [f64]) {
        let h = self.hidden;
        let l = layout(h);
        let p = &self.params;
        let mut d_h2 = vec![0.0; h];
        for o in 0..6 {
            let dz = d_out[o] * self.output_std[o];
            grad[l.b3 + o] += dz;
            for i in 0..h {
                grad[l.w3 + o * h + i] += dz * pass.h2[i];
                d_h2[i] += dz * p[l.w3 + o * h + i];
            }
        }
        let mut d_h1 = vec![0.0; h];
        for j in 0..h {
            let dz = d_h2[j] * (1.0 - pass.h2[j] * pass.h2[j]);
            grad[l.b2 + j] += dz;
            for i in 0..h {
                grad[l.w2 + j * h + i] += dz * pass.h1[i];
                d_h1[i] += dz * p[l.w2 + j * h + i];
            }
        }
        for j in 0..h {
            let dz = d_h1[j] * (1.0 - pass.h1[j] * pass.h1[j]);
            grad[l.b1 + j] += dz;
            for i in 0..6 {
                grad[l.w1 + j * 6 + i] += dz * pass.x[i];
            }
        }
    }

    /// Fits on (effort, wrench) pairs with Adam on the same weighted loss as
    /// the image regressor.
    pub fn fit(efforts: &[[f64; 6]], wrenches: &[Wrench], config: &EffortMlpConfig) -> Result<Self> {
        Self::fit_with_curve(efforts, wrenches, config).map(|(m, _)| m)
    }

    /// Like `fit`, also returning the mean batch loss per iteration.
    pub fn fit_with_curve(
        efforts: &[[f64; 6]],
        wrenches: &[Wrench],
        config: &EffortMlpConfig,
    ) -> Result<(Self, Vec<f64>)> {
        if efforts.len() != wrenches.len() {
            return Err(Error::LengthMismatch {
                left: efforts.len(),
                right: wrenches.len(),
            });
        }
        if efforts.len() < 2 {
            return Err(Error::Empty("effort training set"));
        }
        if config.hidden == 0 || config.batch_size == 0 || config.iterations == 0 {
            return Err(Error::Config("effort MLP sizes must be positive".into()));
        }
        let n = efforts.len() as f64;
        let mut input_mean = [0.0; 6];
        let mut input_inv_std = [0.0; 6];
        for i in 0..6 {
            let m = efforts.iter().map(|e| e[i]).sum::<f64>() / n;
            let var = efforts.iter().map(|e| (e[i] - m).powi(2)).sum::<f64>() / n;
            input_mean[i] = m;
            if var.sqrt() > 1e-12 {
                input_inv_std[i] = 1.0 / var.sqrt();
            } else {
                log::warn!("effort channel {i} is constant; ignoring it");
            }
        }
        let (output_mean, std) = wrench_statistics(wrenches);
        let output_std = std.map(|s| if s > 1e-9 { s } else { 1.0 });
        let c = torque_weight(wrenches, TorqueWeightMode::NormStd).unwrap_or(1.0);

        let h = config.hidden;
        let l = layout(h);
        let mut rng = Rng::new(config.seed).child("effort-mlp");
        let mut params = vec![0.0; l.len];
        let mut init = |range: std::ops::Range<usize>, fan_in: usize| {
            let b = (6.0 / fan_in as f64).sqrt();
            for v in &mut params[range] {
                *v = rng.uniform(-b, b);
            }
        };
        init(l.w1..l.b1, 6);
        init(l.w2..l.b2, h);
        init(l.w3..l.b3, h);
        let mut mlp = Self {
            input_mean,
            input_inv_std,
            output_mean,
            output_std,
            hidden: h,
            params,
        };

        let mut batch_rng = Rng::new(config.seed).child("effort-batch");
        let (mut m, mut v) = (vec![0.0; l.len], vec![0.0; l.len]);
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let scale = 1.0 / config.batch_size as f64;
        let mut curve = Vec::with_capacity(config.iterations);
        for t in 1..=config.iterations {
            let mut grad = vec![0.0; l.len];
            let mut batch_loss = 0.0;
            for _ in 0..config.batch_size {
                let k = batch_rng.below(efforts.len());
                let pass = mlp.forward(&efforts[k]);
                let truth = wrenches[k].to_array();
                let mut d = [0.0; 6];
                for i in 0..6 {
                    let w = if i < 3 { 1.0 } else { c };
                    batch_loss += w * (pass.out[i] - truth[i]).powi(2) * scale;
                    d[i] = 2.0 * w * (pass.out[i] - truth[i]) * scale;
                }
                mlp.backward(&pass, &d, &mut grad);
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    iteration: t,
                    loss: f64::NAN,
                });
            }
            let c1 = 1.0 - b1.powi(t as i32);
            let c2 = 1.0 - b2.powi(t as i32);
            for i in 0..l.len {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                mlp.params[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
            curve.push(batch_loss);
        }
        Ok((mlp, curve))
    }

    pub fn to_text(&self) -> String {
        let j = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = format!("vft-effort-mlp 1\nhidden = {}\n", self.hidden);
        s += &format!("input_mean = {}\n", j(&self.input_mean));
        s += &format!("input_inv_std = {}\n", j(&self.input_inv_std));
        s += &format!("output_mean = {}\n", j(&self.output_mean));
        s += &format!("output_std = {}\n", j(&self.output_std));
        s += &format!("parameters = {}\n", self.params.len());
        for p in &self.params {
            s += &format!("{p:?}\n");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("effort MLP file: {why}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("vft-effort-mlp 1") {
            return Err(bad("unrecognized header"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            if k.trim() != name {
                return Err(bad(&format!("expected `{name}`")));
            }
            Ok(v.trim().to_string())
        };
        let hidden: usize = field("hidden")?.parse().map_err(|_| bad("hidden"))?;
        let six = |s: String| -> Result<[f64; 6]> {
            let v: Vec<f64> = s
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| bad("number")))
                .collect::<Result<_>>()?;
            v.try_into().map_err(|_| bad("expected 6 values"))
        };
        let input_mean = six(field("input_mean")?)?;
        let input_inv_std = six(field("input_inv_std")?)?;
        let output_mean = six(field("output_mean")?)?;
        let output_std = six(field("output_std")?)?;
        let count: usize = field("parameters")?.parse().map_err(|_| bad("parameters"))?;
        let params: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().map_err(|_| bad("parameter")))
            .collect::<Result<_>>()?;
        if params.len() != count || count != layout(hidden).len {
            return Err(bad("parameter count mismatch"));
        }
        Ok(Self {
            input_mean,
            input_inv_std,
            output_mean,
            output_std,
            hidden,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EffortModel;

    fn random_wrenches(n: usize, seed: u64) -> Vec<Wrench> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                Wrench::from_array([
                    rng.gaussian(1.0),
                    rng.gaussian(1.0),
                    rng.gaussian(2.0),
                    rng.gaussian(0.2),
                    rng.gaussian(0.05),
                    rng.gaussian(0.1),
                ])
            })
            .collect()
    }

    #[test]
    fn mean_guesser_predicts_mean() {
        let ws = vec![
            Wrench::from_array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Wrench::from_array([3.0, 2.0, 0.0, 0.0, 0.0, 1.0]),
        ];
        let m = MeanGuesser::fit(&ws).unwrap();
        assert_eq!(m.predict().to_array(), [2.0, 1.0, 0.0, 0.0, 0.0, 0.5]);
        assert!(MeanGuesser::fit(&[]).is_err());
    }

    #[test]
    fn full_rank_noise_free_efforts_are_invertible() {
        let model = EffortModel::full_rank().noiseless();
        let train = random_wrenches(4000, 1);
        let test = random_wrenches(500, 2);
        let mut rng = Rng::new(0);
        let e_train: Vec<[f64; 6]> = train.iter().map(|w| model.simulate(w, &mut rng)).collect();
        let mlp = EffortMlp::fit(&e_train, &train, &EffortMlpConfig::default()).unwrap();
        let mse: f64 = test
            .iter()
            .map(|w| (mlp.predict(&model.simulate(w, &mut rng)).force - w.force).norm_squared())
            .sum::<f64>()
            / test.len() as f64;
        assert!(mse.sqrt() < 0.1, "rmse {}", mse.sqrt());
    }

    #[test]
    fn constant_channel_is_ignored() {
        let ws = random_wrenches(200, 3);
        let es: Vec<[f64; 6]> = ws.iter().map(|w| [w.force.x, w.force.y, w.force.z, 1.0, 0.0, 0.0]).collect();
        let cfg = EffortMlpConfig {
            iterations: 200,
            ..EffortMlpConfig::default()
        };
        let mlp = EffortMlp::fit(&es, &ws, &cfg).unwrap();
        assert_eq!(mlp.input_inv_std[3], 0.0);
        let p = mlp.predict(&[0.0; 6]);
        assert!(p.is_finite());
        let p2 = mlp.predict(&mlp.input_mean);
        assert!(p2.is_finite());
    }

    #[test]
    fn text_round_trip() {
        let ws = random_wrenches(100, 4);
        let es: Vec<[f64; 6]> = ws.iter().map(|w| w.to_array()).collect();
        let cfg = EffortMlpConfig {
            iterations: 50,
            hidden: 8,
            ..EffortMlpConfig::default()
        };
        let mlp = EffortMlp::fit(&es, &ws, &cfg).unwrap();
        assert_eq!(EffortMlp::from_text(&mlp.to_text()).unwrap(), mlp);
        assert!(EffortMlp::from_text("nope").is_err());
    }
}
