//! Flat `key = value` run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use vft_core::baselines::EffortMlpConfig;
use vft_core::control::{TaskKind, WipeConfig};
use vft_core::dataset::{DatasetConfig, Primitive};
use vft_core::estimator::TrainConfig;
use vft_core::gripper::GripperKind;

pub const CONFIG_ECHO: &str = "config.txt";

const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("jobs", "0"),
    ("data.dir", "data"),
    ("data.quick", "false"),
    ("data.gripper", "tendon_actuated"),
    ("data.environments", "lab,office_a,office_b,home"),
    ("data.seconds_per_combination", "auto"),
    ("data.sequence_seconds", "15"),
    ("split.holdout", "home"),
    ("train.method", "cnn"),
    ("train.checkpoint", "model/estimator.ckpt"),
    ("train.effort_model", "model/effort_mlp.txt"),
    ("train.iterations", "20000"),
    ("train.learning_rate", "0.0001"),
    ("train.batch_size", "4"),
    ("train.flip", "true"),
    ("train.photometric", "true"),
    ("train.output_gain", "3"),
    ("mlp.hidden", "64"),
    ("mlp.iterations", "20000"),
    ("mlp.learning_rate", "0.001"),
    ("mlp.batch_size", "32"),
    ("eval.out", "eval"),
    ("eval.bins", "60"),
    ("eval.sample_sequences", "2"),
    ("task.name", "grasp"),
    ("task.trials", "10"),
    ("task.estimator", "cnn"),
    ("task.env", "home"),
    ("task.out", "tasks"),
    ("wipe.k_f", "5"),
    ("wipe.step", "0.02"),
    ("wipe.start_force", "5"),
    ("wipe.timeout", "3"),
    ("wipe.min_height", "-0.03"),
    ("wipe.max_steps", "600"),
    ("plots.input", "eval"),
    ("plots.out", "plots"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cnn,
    EffortMlp,
}

impl FromStr for Method {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn" => Ok(Method::Cnn),
            "effort_mlp" | "mlp" => Ok(Method::EffortMlp),
            _ => bail!("unknown method `{s}` (valid: cnn, effort_mlp)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Cnn,
    GroundTruth,
    Zero,
}

impl FromStr for EstimatorChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn" => Ok(EstimatorChoice::Cnn),
            "gt" => Ok(EstimatorChoice::GroundTruth),
            "zero" => Ok(EstimatorChoice::Zero),
            _ => bail!("unknown estimator `{s}` (valid: cnn, gt, zero)"),
        }
    }
}

/// Every known key with its effective value. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("`{key}` expects true or false, got `{v}`"),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => bail!("unknown config key `{key}`"),
        }
    }

    /// Applies `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{pair}`"))?;
        self.set(k, v)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no config key `{key}`"))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(key);
        v.parse::<T>().map_err(|e| anyhow!("bad value `{v}` for `{key}`: {e}"))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        parse_bool(key, self.get(key))
    }

    pub fn path(&self, key: &str) -> PathBuf {
        PathBuf::from(self.get(key))
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            self.set(k, v).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.merge_text(&text).with_context(|| format!("in {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# effective configuration\n");
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Writes the config echo into `dir`.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(CONFIG_ECHO);
        fs::write(&path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("seed")
    }

    /// Worker threads; `None` leaves the pool default.
    pub fn jobs(&self) -> Result<Option<usize>> {
        let j: usize = self.parsed("jobs")?;
        Ok((j > 0).then_some(j))
    }

    pub fn dataset_config(&self) -> Result<DatasetConfig> {
        let mut cfg = if self.flag("data.quick")? {
            DatasetConfig::quick()
        } else {
            DatasetConfig::default()
        };
        cfg.seed = self.seed()?;
        cfg.gripper = self.parsed::<GripperKind>("data.gripper")?;
        cfg.environments = self
            .get("data.environments")
            .split(',')
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .collect();
        let secs = self.get("data.seconds_per_combination");
        if secs != "auto" {
            cfg.seconds_per_combination = self.parsed("data.seconds_per_combination")?;
        }
        cfg.sequence_seconds = self.parsed("data.sequence_seconds")?;
        cfg.primitives = Primitive::ALL.to_vec();
        cfg.validate().map_err(|e| anyhow!("invalid dataset config: {e}"))?;
        Ok(cfg)
    }

    pub fn method(&self) -> Result<Method> {
        self.parsed("train.method")
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            learning_rate: self.parsed("train.learning_rate")?,
            batch_size: self.parsed("train.batch_size")?,
            iterations: self.parsed("train.iterations")?,
            flip: self.flag("train.flip")?,
            photometric: self.flag("train.photometric")?,
            output_gain: self.parsed("train.output_gain")?,
            seed: self.seed()?,
            ..TrainConfig::default()
        };
        cfg.validate().map_err(|e| anyhow!("invalid train config: {e}"))?;
        Ok(cfg)
    }

    pub fn mlp_config(&self) -> Result<EffortMlpConfig> {
        Ok(EffortMlpConfig {
            hidden: self.parsed("mlp.hidden")?,
            learning_rate: self.parsed("mlp.learning_rate")?,
            batch_size: self.parsed("mlp.batch_size")?,
            iterations: self.parsed("mlp.iterations")?,
            seed: self.seed()?,
        })
    }

    pub fn task(&self) -> Result<TaskKind> {
        self.parsed("task.name")
    }

    pub fn estimator(&self) -> Result<EstimatorChoice> {
        self.parsed("task.estimator")
    }

    pub fn trials(&self) -> Result<usize> {
        self.parsed("task.trials")
    }

    pub fn bins(&self) -> Result<usize> {
        self.parsed("eval.bins")
    }

    pub fn sample_sequences(&self) -> Result<usize> {
        self.parsed("eval.sample_sequences")
    }

    pub fn wipe_config(&self) -> Result<WipeConfig> {
        let cfg = WipeConfig {
            k_f: self.parsed("wipe.k_f")?,
            step: self.parsed("wipe.step")?,
            start_force: self.parsed("wipe.start_force")?,
            timeout: self.parsed("wipe.timeout")?,
            min_height: self.parsed("wipe.min_height")?,
            max_steps: self.parsed("wipe.max_steps")?,
            ..WipeConfig::default()
        };
        cfg.validate().map_err(|e| anyhow!("invalid wipe config: {e}"))?;
        Ok(cfg)
    }
}
