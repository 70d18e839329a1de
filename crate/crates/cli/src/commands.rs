//! The five pipeline stages. Each writes a config echo next to its outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use vft_core::baselines::{EffortMlp, MeanGuesser};
use vft_core::control::{
    run_trials, write_summary, GroundTruthEstimator, TaskSummary, VisualEstimator, WrenchEstimator,
    ZeroEstimator,
};
use vft_core::dataset::{generate_dataset, load_samples, split_by_environment, Manifest, Sample};
use vft_core::estimator::{
    load_checkpoint, save_checkpoint, train as train_model, write_loss_curve, Architecture, RegressionModel,
};
use vft_core::evaluation::{axis_histograms, export_timeseries, write_reports, EvalReport};
use vft_core::gripper::GripperModel;
use vft_core::renderer::EnvironmentSpec;
use vft_core::wrench::AXIS_NAMES;
use vft_core::{Rng, Wrench};

use crate::config::{EstimatorChoice, Method, RunConfig};

pub const REPORTS_FILE: &str = "reports.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const LOSS_FILE: &str = "loss_curve.csv";

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn load_manifest(cfg: &RunConfig) -> Result<Manifest> {
    let dir = cfg.path("data.dir");
    Manifest::load(&dir).with_context(|| format!("no dataset at {} (run gen-data first)", dir.display()))
}

pub fn gen_data(cfg: &RunConfig) -> Result<Manifest> {
    let dcfg = cfg.dataset_config()?;
    let dir = cfg.path("data.dir");
    info!("generating {} environments into {}", dcfg.environments.len(), dir.display());
    let manifest = generate_dataset(&dcfg, &dir).with_context(|| format!("generating dataset in {}", dir.display()))?;
    cfg.echo_into(&dir)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &manifest.sequences {
        *counts.entry(s.primitive.to_string()).or_default() += s.n_frames;
    }
    for (p, n) in &counts {
        println!("{p}: {n} frames");
    }
    println!("total: {} frames in {} sequences", manifest.frame_count(), manifest.sequences.len());
    Ok(manifest)
}

/// Trains the configured method on the non-held-out environments and
/// returns the written model path.
pub fn train(cfg: &RunConfig) -> Result<PathBuf> {
    let manifest = load_manifest(cfg)?;
    let holdout = cfg.get("split.holdout");
    let (train_split, _) = split_by_environment(&manifest, holdout)?;
    match cfg.method()? {
        Method::Cnn => {
            let tcfg = cfg.train_config()?;
            let samples = load_samples(&train_split, true)?;
            info!("training on {} frames for {} iterations", samples.len(), tcfg.iterations);
            let model = RegressionModel::new(Architecture::default(), &mut Rng::new(tcfg.seed))?;
            let outcome = train_model(model, &samples, &tcfg)?;
            let path = cfg.path("train.checkpoint");
            save_checkpoint(&path, &outcome.model, Some(&tcfg), Some(outcome.torque_weight))?;
            let dir = parent_dir(&path);
            write_loss_curve(&dir.join(LOSS_FILE), &outcome.loss_curve)?;
            cfg.echo_into(&dir)?;
            println!("checkpoint: {} (c = {:.4})", path.display(), outcome.torque_weight);
            Ok(path)
        }
        Method::EffortMlp => {
            let mcfg = cfg.mlp_config()?;
            let samples = load_samples(&train_split, false)?;
            let efforts: Vec<[f64; 6]> = samples.iter().map(|s| s.effort).collect();
            let wrenches: Vec<Wrench> = samples.iter().map(|s| s.wrench).collect();
            let (mlp, curve) = EffortMlp::fit_with_curve(&efforts, &wrenches, &mcfg)?;
            let path = cfg.path("train.effort_model");
            let dir = parent_dir(&path);
            fs::create_dir_all(&dir)?;
            fs::write(&path, mlp.to_text()).with_context(|| format!("writing {}", path.display()))?;
            write_loss_curve(&dir.join("effort_mlp_loss.csv"), &curve)?;
            cfg.echo_into(&dir)?;
            println!("effort model: {}", path.display());
            Ok(path)
        }
    }
}

struct MethodOutput {
    name: &'static str,
    pred: Vec<Wrench>,
}

fn cnn_predictions(model: &RegressionModel, samples: &[Sample]) -> Result<Vec<Wrench>> {
    samples
        .par_iter()
        .map(|s| model.predict(&s.to_image()).map_err(Into::into))
        .collect()
}

/// Writes one report row per method, per-axis histograms, and time series
/// for the first few test sequences.
pub fn eval(cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    let manifest = load_manifest(cfg)?;
    let (train_split, test_split) = split_by_environment(&manifest, cfg.get("split.holdout"))?;
    let train_samples = load_samples(&train_split, false)?;
    let test = load_samples(&test_split, true)?;
    let truth: Vec<Wrench> = test.iter().map(|s| s.wrench).collect();

    let mut methods = Vec::new();
    let ckpt = cfg.path("train.checkpoint");
    let model = load_checkpoint(&ckpt, Some(&Architecture::default()))
        .with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
    methods.push(MethodOutput {
        name: "cnn",
        pred: cnn_predictions(&model, &test)?,
    });
    let mean = MeanGuesser::fit(&train_samples.iter().map(|s| s.wrench).collect::<Vec<_>>())?;
    methods.push(MethodOutput {
        name: "mean_guesser",
        pred: vec![mean.predict(); test.len()],
    });
    let effort_path = cfg.path("train.effort_model");
    if effort_path.exists() {
        let text = fs::read_to_string(&effort_path)?;
        let mlp = EffortMlp::from_text(&text).with_context(|| format!("loading {}", effort_path.display()))?;
        methods.push(MethodOutput {
            name: "effort_mlp",
            pred: test.iter().map(|s| mlp.predict(&s.effort)).collect(),
        });
    } else {
        warn!("no effort model at {}; skipping that baseline", effort_path.display());
    }

    let out = cfg.path("eval.out");
    fs::create_dir_all(&out)?;
    let bins = cfg.bins()?;
    let mut reports = Vec::new();
    for m in &methods {
        let report = EvalReport::compute(m.name, "test", &m.pred, &truth)?;
        println!("{}", report.csv_row());
        reports.push(report);
        for h in axis_histograms(&m.pred, &truth, bins)? {
            fs::write(out.join(format!("hist_{}_{}.txt", m.name, AXIS_NAMES[h.axis])), h.to_text())?;
        }
    }
    write_reports(&out.join(REPORTS_FILE), &reports)?;

    let sample_count = cfg.sample_sequences()?;
    for k in 0..sample_count.min(test_split.sequences.len()) {
        let idx: Vec<usize> = (0..test.len()).filter(|&i| test[i].sequence == k).collect();
        let times: Vec<f64> = idx.iter().map(|&i| test[i].timestamp).collect();
        let gt: Vec<Wrench> = idx.iter().map(|&i| truth[i]).collect();
        for m in &methods {
            let est: Vec<Wrench> = idx.iter().map(|&i| m.pred[i]).collect();
            let path = out.join(format!("timeseries_{}_{k}.csv", m.name));
            export_timeseries(&path, &times, &gt, &est)?;
        }
    }
    cfg.echo_into(&out)?;
    Ok(reports)
}

fn estimator_for(cfg: &RunConfig) -> Result<Box<dyn WrenchEstimator>> {
    Ok(match cfg.estimator()? {
        EstimatorChoice::GroundTruth => Box::new(GroundTruthEstimator),
        EstimatorChoice::Zero => Box::new(ZeroEstimator),
        EstimatorChoice::Cnn => {
            let ckpt = cfg.path("train.checkpoint");
            let model = load_checkpoint(&ckpt, Some(&Architecture::default()))
                .with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
            let camera = cfg.dataset_config()?.settings.camera;
            Box::new(VisualEstimator::new(model, camera, EnvironmentSpec::procedural(cfg.get("task.env"))))
        }
    })
}

/// Runs the configured number of seeded trials and writes the summary,
/// one row per trial and one trace per trial.
pub fn run_task(cfg: &RunConfig) -> Result<TaskSummary> {
    let task = cfg.task()?;
    let trials = cfg.trials()?;
    if trials == 0 {
        bail!("task.trials must be at least 1");
    }
    let wipe = cfg.wipe_config()?;
    let gripper = GripperModel::preset(cfg.dataset_config()?.gripper);
    let mut estimator = estimator_for(cfg)?;
    let results = run_trials(task, &gripper, estimator.as_mut(), &wipe, cfg.seed()?, trials)?;

    let out = cfg.path("task.out");
    let traces = out.join("traces");
    fs::create_dir_all(&traces)?;
    let mut rows = String::from("trial,seed,success,outcome,coverage\n");
    for (i, r) in results.iter().enumerate() {
        let cov = r.coverage.map_or("-".to_string(), |c| format!("{c:.4}"));
        let _ = writeln!(rows, "{i},{},{},{},{cov}", r.seed, r.success, r.outcome);
        r.write_trace(&traces.join(format!("{task}_{i:02}.csv")))?;
    }
    fs::write(out.join(TRIALS_FILE), rows)?;
    let summary = TaskSummary::from_results(task, &results);
    write_summary(&out.join(SUMMARY_FILE), std::slice::from_ref(&summary))?;
    cfg.echo_into(&out)?;
    println!("{}", summary.csv_row());
    Ok(summary)
}

/// Parses a histogram grid written by `eval`.
fn parse_histogram(text: &str) -> Result<(Vec<f64>, Vec<Vec<u64>>)> {
    let mut edges = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(e) = line.strip_prefix("# edges=") {
            edges = e.split(',').map(str::parse).collect::<std::result::Result<_, _>>()?;
        } else if !line.starts_with('#') && !line.trim().is_empty() {
            rows.push(line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>()?);
        }
    }
    if edges.len() != rows.len() + 1 || rows.iter().any(|r: &Vec<u64>| r.len() != rows.len()) {
        bail!("histogram grid is not square or edges do not match");
    }
    Ok((edges, rows))
}

/// Histograms become `gt est count` blocks (one block per gt bin, blank
/// line separated); time series become `t gt est` blocks per axis.
pub fn export_plots(cfg: &RunConfig) -> Result<usize> {
    let input = cfg.path("plots.input");
    let out = cfg.path("plots.out");
    fs::create_dir_all(&out)?;
    let mut names: Vec<PathBuf> = fs::read_dir(&input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    names.sort();
    let mut written = 0;
    for path in names {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let mut s = String::new();
        if stem.starts_with("hist_") {
            let (edges, rows) = parse_histogram(&fs::read_to_string(&path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            let center = |i: usize| 0.5 * (edges[i] + edges[i + 1]);
            let _ = writeln!(s, "# gt est count");
            for (i, row) in rows.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    let _ = writeln!(s, "{:.6} {:.6} {c}", center(i), center(j));
                }
                s.push('\n');
            }
        } else if stem.starts_with("timeseries_") {
            let mut by_axis: BTreeMap<usize, Vec<(String, String, String)>> = BTreeMap::new();
            let mut reader = csv::Reader::from_path(&path)?;
            for rec in reader.records() {
                let rec = rec?;
                let axis = AXIS_NAMES.iter().position(|a| *a == &rec[1]).unwrap_or(0);
                by_axis.entry(axis).or_default().push((rec[0].to_string(), rec[2].to_string(), rec[3].to_string()));
            }
            for (axis, rows) in by_axis {
                let _ = writeln!(s, "# axis {} (t gt est)", AXIS_NAMES[axis]);
                for (t, g, e) in rows {
                    let _ = writeln!(s, "{t} {g} {e}");
                }
                s.push_str("\n\n");
            }
        } else {
            continue;
        }
        fs::write(out.join(format!("{stem}.dat")), s)?;
        written += 1;
    }
    cfg.echo_into(&out)?;
    println!("wrote {written} plot files to {}", out.display());
    Ok(written)
}
