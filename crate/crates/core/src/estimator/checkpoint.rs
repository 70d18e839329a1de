//! Text checkpoint container and loss-curve export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::network::{Architecture, RegressionModel, OUTPUTS};
use super::train::TrainConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "vft-regressor";
pub const CHECKPOINT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

/// Serializes the model. Floats use the shortest exact representation, so
/// loading restores every parameter bit for bit.
pub fn checkpoint_text(model: &RegressionModel, config: Option<&TrainConfig>, torque_weight: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(s, "architecture = {}", model.architecture());
    let _ = writeln!(s, "output_offset = {}", join(&model.output_offset));
    let _ = writeln!(s, "output_scale = {}", join(&model.output_scale));
    if let Some(c) = torque_weight {
        let _ = writeln!(s, "torque_weight = {c:?}");
    }
    if let Some(cfg) = config {
        let _ = writeln!(s, "# train.learning_rate = {:?}", cfg.learning_rate);
        let _ = writeln!(s, "# train.batch_size = {}", cfg.batch_size);
        let _ = writeln!(s, "# train.iterations = {}", cfg.iterations);
        let _ = writeln!(s, "# train.torque_weight_mode = {}", cfg.torque_weight_mode.as_str());
        let _ = writeln!(s, "# train.flip = {}", cfg.flip);
        let _ = writeln!(s, "# train.photometric = {}", cfg.photometric);
        let _ = writeln!(s, "# train.normalize_outputs = {}", cfg.normalize_outputs);
        let _ = writeln!(s, "# train.output_gain = {:?}", cfg.output_gain);
        let _ = writeln!(s, "# train.seed = {}", cfg.seed);
    }
    let _ = writeln!(s, "parameters = {}", model.parameters().len());
    for p in model.parameters() {
        let _ = writeln!(s, "{p:?}");
    }
    s
}

pub fn save_checkpoint(
    path: &Path,
    model: &RegressionModel,
    config: Option<&TrainConfig>,
    torque_weight: Option<f64>,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, checkpoint_text(model, config, torque_weight))?;
    Ok(())
}

fn parse_six(path: &Path, v: &str) -> Result<[f64; OUTPUTS]> {
    let vals: Vec<f64> = v
        .split_whitespace()
        .map(|x| x.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, "bad output mapping"))?;
    vals.try_into().map_err(|_| Error::format(path, "output mapping needs 6 values"))
}

/// Loads a checkpoint. When `expected` is given the stored architecture must
/// match it.
pub fn load_checkpoint(path: &Path, expected: Option<&Architecture>) -> Result<RegressionModel> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    match header.split_once(' ') {
        Some((CHECKPOINT_MAGIC, v)) if v.trim() == CHECKPOINT_VERSION.to_string() => {}
        Some((CHECKPOINT_MAGIC, v)) => {
            return Err(Error::format(path, format!("unsupported checkpoint version {v}")))
        }
        _ => return Err(Error::format(path, "not a regressor checkpoint")),
    }
    let mut arch = None;
    let mut offset = [0.0; OUTPUTS];
    let mut scale = [1.0; OUTPUTS];
    let mut count = None;
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("unexpected line `{line}`")))?;
        match k.trim() {
            "architecture" => arch = Some(v.trim().parse::<Architecture>()?),
            "output_offset" => offset = parse_six(path, v)?,
            "output_scale" => scale = parse_six(path, v)?,
            "torque_weight" => {}
            "parameters" => {
                count = Some(v.trim().parse::<usize>().map_err(|_| Error::format(path, "bad parameter count"))?);
                break;
            }
            other => return Err(Error::format(path, format!("unknown key `{other}`"))),
        }
    }
    let arch = arch.ok_or_else(|| Error::format(path, "missing architecture"))?;
    if let Some(e) = expected {
        if *e != arch {
            return Err(Error::format(
                path,
                format!("architecture mismatch: checkpoint has `{arch}`, expected `{e}`"),
            ));
        }
    }
    let count = count.ok_or_else(|| Error::format(path, "missing parameters"))?;
    let params: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| Error::format(path, format!("bad parameter `{l}`"))))
        .collect::<Result<_>>()?;
    if params.len() != count {
        return Err(Error::format(path, format!("expected {count} parameters, found {}", params.len())));
    }
    let mut model = RegressionModel::from_parameters(arch, params)?;
    model.output_offset = offset;
    model.output_scale = scale;
    Ok(model)
}

pub fn write_loss_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "loss"])?;
    for (i, l) in curve.iter().enumerate() {
        w.write_record([i.to_string(), format!("{l:?}")])?;
    }
    w.flush()?;
    Ok(())
}
