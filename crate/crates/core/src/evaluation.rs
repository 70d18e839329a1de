//! Error metrics, 2D histograms and time-series export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::wrench::{Wrench, AXIS_NAMES};

fn check_lengths(pred: &[Wrench], truth: &[Wrench]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    Ok(())
}

/// `(RMSE_F, RMSE_T)` using the Euclidean norm of each 3-vector error.
pub fn rmse(pred: &[Wrench], truth: &[Wrench]) -> Result<(f64, f64)> {
    check_lengths(pred, truth)?;
    let n = pred.len() as f64;
    let (mut f, mut t) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(truth) {
        f += (p.force - g.force).norm_squared();
        t += (p.torque - g.torque).norm_squared();
    }
    Ok(((f / n).sqrt(), (t / n).sqrt()))
}

pub fn per_axis_rmse(pred: &[Wrench], truth: &[Wrench]) -> Result<[f64; 6]> {
    check_lengths(pred, truth)?;
    let mut acc = [0.0; 6];
    for (p, g) in pred.iter().zip(truth) {
        let (p, g) = (p.to_array(), g.to_array());
        for i in 0..6 {
            acc[i] += (p[i] - g[i]).powi(2);
        }
    }
    Ok(acc.map(|s| (s / pred.len() as f64).sqrt()))
}

/// RMSE of the error component along a 6-vector direction (normalized here).
pub fn direction_rmse(pred: &[Wrench], truth: &[Wrench], direction: &[f64; 6]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateProjection);
    }
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, g)| {
            let e = (*p - *g).to_array();
            let d: f64 = (0..6).map(|i| e[i] * direction[i] / norm).sum();
            d * d
        })
        .sum();
    Ok((s / pred.len() as f64).sqrt())
}

/// Per-axis population standard deviation.
pub fn axis_std(values: &[Wrench]) -> [f64; 6] {
    let n = values.len().max(1) as f64;
    let mut mean = [0.0; 6];
    for v in values {
        for (m, x) in mean.iter_mut().zip(v.to_array()) {
            *m += x / n;
        }
    }
    let mut var = [0.0; 6];
    for v in values {
        for (i, x) in v.to_array().into_iter().enumerate() {
            var[i] += (x - mean[i]).powi(2) / n;
        }
    }
    var.map(f64::sqrt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub split: String,
    pub n: usize,
    pub rmse_f: f64,
    pub rmse_t: f64,
    pub per_axis: [f64; 6],
}

pub const REPORT_HEADER: &str = "method,split,n,rmse_f,rmse_t,rmse_fx,rmse_fy,rmse_fz,rmse_tx,rmse_ty,rmse_tz";

impl EvalReport {
    pub fn compute(method: &str, split: &str, pred: &[Wrench], truth: &[Wrench]) -> Result<Self> {
        let (rmse_f, rmse_t) = rmse(pred, truth)?;
        Ok(Self {
            method: method.to_string(),
            split: split.to_string(),
            n: pred.len(),
            rmse_f,
            rmse_t,
            per_axis: per_axis_rmse(pred, truth)?,
        })
    }

    pub fn csv_row(&self) -> String {
        let axes: Vec<String> = self.per_axis.iter().map(|v| format!("{v:.6}")).collect();
        format!(
            "{},{},{},{:.6},{:.6},{}",
            self.method,
            self.split,
            self.n,
            self.rmse_f,
            self.rmse_t,
            axes.join(",")
        )
    }
}

pub fn write_reports(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in reports {
        s += &r.csv_row();
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Counts over (ground truth, estimate) on a square symmetric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisHistogram {
    pub axis: usize,
    /// `bins + 1` edges from `-range` to `range`.
    pub edges: Vec<f64>,
    /// `counts[gt_bin][est_bin]`.
    pub counts: Vec<Vec<u64>>,
    pub log_scale: bool,
}

impl AxisHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Two header lines (axis, edges) then one row of counts per gt bin.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# axis={} bins={} scale={}",
            AXIS_NAMES[self.axis],
            self.counts.len(),
            if self.log_scale { "log" } else { "linear" }
        );
        let edges: Vec<String> = self.edges.iter().map(|e| format!("{e:.6}")).collect();
        let _ = writeln!(s, "# edges={}", edges.join(","));
        for row in &self.counts {
            let r: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{}", r.join(" "));
        }
        s
    }
}

fn bin_of(v: f64, range: f64, bins: usize) -> usize {
    let t = (v + range) / (2.0 * range);
    ((t * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

pub fn axis_histograms(pred: &[Wrench], truth: &[Wrench], bins: usize) -> Result<Vec<AxisHistogram>> {
    check_lengths(pred, truth)?;
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut out = Vec::with_capacity(6);
    for axis in 0..6 {
        let range = pred
            .iter()
            .chain(truth)
            .map(|w| w.to_array()[axis].abs())
            .fold(0.0, f64::max)
            .max(1e-12);
        let edges = (0..=bins).map(|i| -range + 2.0 * range * i as f64 / bins as f64).collect();
        let mut counts = vec![vec![0u64; bins]; bins];
        for (p, g) in pred.iter().zip(truth) {
            let gi = bin_of(g.to_array()[axis], range, bins);
            let pi = bin_of(p.to_array()[axis], range, bins);
            counts[gi][pi] += 1;
        }
        out.push(AxisHistogram {
            axis,
            edges,
            counts,
            log_scale: true,
        });
    }
    Ok(out)
}

/// Writes `t,axis,gt,est`, one row per frame and axis. Returns the row count.
pub fn export_timeseries(path: &Path, times: &[f64], truth: &[Wrench], pred: &[Wrench]) -> Result<usize> {
    check_lengths(pred, truth)?;
    if times.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: truth.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "axis", "gt", "est"])?;
    let mut rows = 0;
    for ((t, g), p) in times.iter().zip(truth).zip(pred) {
        let (g, p) = (g.to_array(), p.to_array());
        for axis in 0..6 {
            w.write_record([format!("{t:?}"), AXIS_NAMES[axis].to_string(), format!("{:?}", g[axis]), format!("{:?}", p[axis])])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}
