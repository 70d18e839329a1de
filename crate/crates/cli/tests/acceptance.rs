//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Set `VFT_ACCEPTANCE_DIR` to keep the outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;

use vft_cli::{commands, RunConfig};
use vft_core::baselines::{EffortMlp, MeanGuesser};
use vft_core::contact::{solve_equilibrium, SceneSurface};
use vft_core::control::{wipe_step, GroundTruthEstimator, Observation, WrenchEstimator, ADMITTANCE_GAIN, CONTROL_DT};
use vft_core::dataset::{
    generate_dataset, generate_primitive, load_samples, load_sequence, save_sequence, split_by_environment,
    DatasetConfig, EffortModel, GenerationSettings, Manifest, Primitive, Sample,
};
use vft_core::estimator::{
    augment_flip, flip, gradient_check, gradient_check_with_fault, load_checkpoint, torque_weight,
    Architecture, RegressionModel, TrainConfig,
};
use vft_core::evaluation::EvalReport;
use vft_core::gripper::GripperModel;
use vft_core::renderer::{render, CameraModel, EnvironmentSpec};
use vft_core::{Image, Pose, Rng, Vec3, Wrench};

/// Trained default pipeline shared by the data-driven criteria.
struct Pipeline {
    cfg: RunConfig,
    elapsed: Duration,
    reports: Vec<EvalReport>,
    test: Vec<Sample>,
    train_wrenches: Vec<Wrench>,
    model: RegressionModel,
    mlp: EffortMlp,
}

impl Pipeline {
    fn report(&self, method: &str) -> Result<&EvalReport> {
        self.reports.iter().find(|r| r.method == method).context("missing report")
    }
}

fn work_dir() -> Result<(PathBuf, Option<tempfile::TempDir>)> {
    match std::env::var_os("VFT_ACCEPTANCE_DIR") {
        Some(d) => {
            let d = PathBuf::from(d);
            fs::create_dir_all(&d)?;
            Ok((d, None))
        }
        None => {
            let t = tempfile::tempdir()?;
            Ok((t.path().to_path_buf(), Some(t)))
        }
    }
}

fn config_in(root: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    cfg.set("data.dir", &p("data"))?;
    cfg.set("train.checkpoint", &p("model/estimator.ckpt"))?;
    cfg.set("train.effort_model", &p("model/effort_mlp.txt"))?;
    cfg.set("eval.out", &p("eval"))?;
    cfg.set("task.out", &p("tasks"))?;
    cfg.set("plots.input", &p("eval"))?;
    cfg.set("plots.out", &p("plots"))?;
    Ok(cfg)
}

fn build_pipeline(root: &Path) -> Result<Pipeline> {
    let mut cfg = config_in(root)?;
    let start = Instant::now();
    commands::gen_data(&cfg)?;
    commands::train(&cfg)?;
    cfg.set("train.method", "effort_mlp")?;
    commands::train(&cfg)?;
    cfg.set("train.method", "cnn")?;
    let reports = commands::eval(&cfg)?;
    let elapsed = start.elapsed();

    let manifest = Manifest::load(&cfg.path("data.dir"))?;
    let (train, test) = split_by_environment(&manifest, cfg.get("split.holdout"))?;
    let train_wrenches = load_samples(&train, false)?.iter().map(|s| s.wrench).collect();
    let test = load_samples(&test, true)?;
    let model = load_checkpoint(&cfg.path("train.checkpoint"), Some(&Architecture::default()))?;
    let mlp = EffortMlp::from_text(&fs::read_to_string(cfg.path("train.effort_model"))?)?;
    Ok(Pipeline {
        cfg,
        elapsed,
        reports,
        test,
        train_wrenches,
        model,
        mlp,
    })
}

fn force_rmse_by_hand(pred: &[Wrench], truth: &[Wrench]) -> f64 {
    let s: f64 = pred.iter().zip(truth).map(|(p, g)| (p.force - g.force).norm_squared()).sum();
    (s / pred.len() as f64).sqrt()
}

fn c1_force_ordering(p: &Pipeline) -> Result<String> {
    let cnn = p.report("cnn")?;
    let mean = p.report("mean_guesser")?;
    let mlp = p.report("effort_mlp")?;
    let truth: Vec<Wrench> = p.test.iter().map(|s| s.wrench).collect();
    let pred: Vec<Wrench> = p.test.par_iter().map(|s| p.model.predict(&s.to_image()).unwrap()).collect();
    let by_hand = force_rmse_by_hand(&pred, &truth);
    ensure!((by_hand - cnn.rmse_f).abs() < 1e-9, "report {} vs recomputed {by_hand}", cnn.rmse_f);
    let detail = format!(
        "rmse_f cnn {:.3}, mean {:.3} (ratio {:.3}), effort_mlp {:.3}; pipeline {:.1} min",
        cnn.rmse_f,
        mean.rmse_f,
        cnn.rmse_f / mean.rmse_f,
        mlp.rmse_f,
        p.elapsed.as_secs_f64() / 60.0
    );
    ensure!(cnn.rmse_f <= 0.8 * mean.rmse_f, "{detail}");
    ensure!(cnn.rmse_f <= mlp.rmse_f, "{detail}");
    ensure!(p.elapsed < Duration::from_secs(3600), "{detail}");
    Ok(detail)
}

fn c2_torque_ordering(p: &Pipeline) -> Result<String> {
    let cnn = p.report("cnn")?;
    let mean = p.report("mean_guesser")?;
    let detail = format!("rmse_t cnn {:.4}, mean {:.4} (ratio {:.3})", cnn.rmse_t, mean.rmse_t, cnn.rmse_t / mean.rmse_t);
    ensure!(cnn.rmse_t <= 0.8 * mean.rmse_t, "{detail}");
    Ok(detail)
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

fn c3_depth_axis_worse(p: &Pipeline) -> Result<String> {
    let cnn = p.report("cnn")?;
    let fx: Vec<f64> = p.test.iter().map(|s| s.wrench.force.x).collect();
    let fz: Vec<f64> = p.test.iter().map(|s| s.wrench.force.z).collect();
    let nx = cnn.per_axis[0] / population_std(&fx);
    let nz = cnn.per_axis[2] / population_std(&fz);
    let detail = format!("normalized error x {nx:.3}, z {nz:.3}");
    ensure!(nz > nx, "{detail}");
    Ok(detail)
}

fn c4_mean_guesser_identity() -> Result<String> {
    let start = Instant::now();
    let mut rng = Rng::new(404);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + rng.below(500);
        let centre: [f64; 6] = std::array::from_fn(|_| rng.uniform(-5.0, 5.0));
        let spread: [f64; 6] = std::array::from_fn(|_| rng.uniform(0.01, 4.0));
        let data: Vec<Wrench> = (0..n)
            .map(|_| Wrench::from_array(std::array::from_fn(|i| centre[i] + rng.gaussian(spread[i]))))
            .collect();
        let guess = MeanGuesser::fit(&data)?.predict();
        let pred = vec![guess; n];
        let rmse = force_rmse_by_hand(&pred, &data);
        let oracle: f64 = (0..3)
            .map(|a| {
                let xs: Vec<f64> = data.iter().map(|w| w.to_array()[a]).collect();
                population_std(&xs).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        let lib = EvalReport::compute("mean", "train", &pred, &data)?.rmse_f;
        worst = worst.max((rmse - oracle).abs()).max((lib - oracle).abs());
    }
    let t = start.elapsed();
    let detail = format!("max deviation {worst:.2e} over 100 datasets in {:.2} s", t.as_secs_f64());
    ensure!(worst <= 1e-9, "{detail}");
    ensure!(t < Duration::from_secs(1), "{detail}");
    Ok(detail)
}

fn c5_gradients(p: &Pipeline) -> Result<String> {
    let start = Instant::now();
    let c = torque_weight(&p.train_wrenches, TrainConfig::default().torque_weight_mode)?;
    let mut rng = Rng::new(505);
    let mut worst: f64 = 0.0;
    let mut canary = f64::INFINITY;
    for _ in 0..20 {
        let s = &p.test[rng.below(p.test.len())];
        let image = s.to_image();
        worst = worst.max(gradient_check(&p.model, &image, &s.wrench, c, &mut rng)?);
        canary = canary.min(gradient_check_with_fault(&p.model, &image, &s.wrench, c, &mut rng, 2.0)?);
    }
    let t = start.elapsed();
    let detail = format!("max rel error {worst:.2e}, weakest canary {canary:.3}, {:.1} s", t.as_secs_f64());
    ensure!(worst < 1e-4, "{detail}");
    ensure!(canary > 0.5, "{detail}");
    ensure!(t < Duration::from_secs(60), "{detail}");
    Ok(detail)
}

fn random_wrench(rng: &mut Rng) -> Wrench {
    Wrench::from_array([
        rng.uniform(-4.0, 4.0),
        rng.uniform(-4.0, 4.0),
        rng.uniform(-4.0, 4.0),
        rng.uniform(-0.3, 0.3),
        rng.uniform(-0.3, 0.3),
        rng.uniform(-0.3, 0.3),
    ])
}

fn c6_flip_algebra() -> Result<String> {
    let start = Instant::now();
    let mut rng = Rng::new(606);
    let mut flipped = 0;
    for _ in 0..1000 {
        let px = (0..64 * 64 * 3).map(|_| rng.uniform(0.0, 1.0) as f32).collect();
        let image = Image::from_pixels(64, 64, px)?;
        let w = random_wrench(&mut rng);
        let (fi, fw) = flip(&image, &w);
        let [fx, fy, fz, tx, ty, tz] = w.to_array();
        ensure!(fw.to_array() == [-fx, fy, fz, tx, -ty, -tz], "wrench reflection");
        for y in 0..64 {
            for x in 0..64 {
                ensure!(fi.get(63 - x, y) == image.get(x, y), "pixel mirror");
            }
        }
        let (bi, bw) = flip(&fi, &fw);
        ensure!(bi == image && bw == w, "double flip is not the identity");
        let (ai, aw) = augment_flip(&image, &w, &mut rng);
        if ai == fi && aw == fw {
            flipped += 1;
        } else {
            ensure!(ai == image && aw == w, "augment_flip is neither identity nor flip");
        }
    }

    let cam = CameraModel::default();
    let env = EnvironmentSpec::uniform("flat", [0.55, 0.6, 0.5]);
    for i in 0..50 {
        let model = GripperModel::tendon_actuated().with_aperture(rng.uniform(0.0, 1.0));
        let w = random_wrench(&mut rng);
        let a = render(&model.deform(&w), &cam, &env, &mut Rng::new(i));
        let b = render(&model.deform(&w.mirrored_x()), &cam, &env, &mut Rng::new(i));
        ensure!(a.flipped_horizontal().to_bytes() == b.to_bytes(), "mirror render differs at sample {i}");
    }
    let t = start.elapsed();
    let detail = format!("1000 frames, {flipped} augmented flips; 50 mirrored renders exact; {:.1} s", t.as_secs_f64());
    ensure!((400..=600).contains(&flipped), "{detail}");
    ensure!(t < Duration::from_secs(60), "{detail}");
    Ok(detail)
}

fn c7_wipe_identities() -> Result<String> {
    let start = Instant::now();
    let mut rng = Rng::new(707);
    let mut normal_err: f64 = 0.0;
    let mut orth_err: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let x = Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        let f = Vec3::new(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
        if f.norm() <= 1.5 {
            continue;
        }
        let d = Vec3::new(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
        let k_f = rng.uniform(0.5, 10.0);
        let next = wipe_step(&x, &f, &d, k_f, ADMITTANCE_GAIN).context("contact expected")?;
        let delta = next - x;
        let along = delta.dot(&f) / f.norm();
        normal_err = normal_err.max((along - ADMITTANCE_GAIN * (f.norm() - k_f)).abs());
        let tangential = delta - f * (delta.dot(&f) / f.norm_squared());
        let expected = d - f * (d.dot(&f) / f.norm_squared());
        orth_err = orth_err.max(tangential.dot(&f).abs() / f.norm()).max((tangential - expected).norm());
        n += 1;
    }
    ensure!(normal_err <= 1e-12, "normal component error {normal_err:.2e}");
    ensure!(orth_err <= 1e-9, "tangential error {orth_err:.2e}");

    let gripper = GripperModel::tendon_actuated().with_aperture(0.0);
    let surface = SceneSurface::plane(0.0, 0.0, 150.0)?;
    let k_f = 5.0;
    let mut position = Vec3::new(0.0, 0.0, 0.03);
    let d = Vec3::new(0.0, 0.02, 0.0);
    let mut last: Option<Vec3> = None;
    let mut force = 0.0;
    let mut steps = 0;
    for _ in 0..20 {
        let pose = Pose::new(position, 0.0);
        let vel = last.map_or(Vec3::zeros(), |p| (position - p) / CONTROL_DT);
        last = Some(position);
        let eq = solve_equilibrium(&gripper, &pose, &surface, &vel);
        let obs = Observation {
            pose: &pose,
            config: &eq.config,
            truth: &eq.wrench,
        };
        let est = GroundTruthEstimator.estimate(&obs)?;
        force = est.force.norm();
        steps += 1;
        position = wipe_step(&position, &est.force, &d, k_f, ADMITTANCE_GAIN).context("lost contact")?;
    }
    let t = start.elapsed();
    let detail = format!(
        "normal err {normal_err:.1e}, tangential err {orth_err:.1e}; |F| {force:.3} N after {steps} steps (k_F {k_f})"
    );
    ensure!((force - k_f).abs() <= 0.1 * k_f, "{detail}");
    ensure!(t < Duration::from_secs(60), "{detail}");
    Ok(detail)
}

fn task_row(cfg: &RunConfig, task: &str, estimator: &str) -> Result<(usize, Option<f64>)> {
    let mut cfg = cfg.clone();
    cfg.set("task.name", task)?;
    cfg.set("task.estimator", estimator)?;
    cfg.set("task.trials", "10")?;
    let out = cfg.path("task.out").join(format!("{task}_{estimator}"));
    cfg.set("task.out", &out.to_string_lossy())?;
    let s = commands::run_task(&cfg)?;
    Ok((s.successes, s.mean_coverage))
}

fn c8_tasks(p: &Pipeline) -> Result<String> {
    let start = Instant::now();
    let (grasp, _) = task_row(&p.cfg, "grasp", "cnn")?;
    let (cover, _) = task_row(&p.cfg, "cover", "cnn")?;
    let (_, clean) = task_row(&p.cfg, "clean", "cnn")?;
    let clean = clean.context("no coverage")?;
    let (g_grasp, _) = task_row(&p.cfg, "grasp", "gt")?;
    let (g_cover, _) = task_row(&p.cfg, "cover", "gt")?;
    let (_, g_clean) = task_row(&p.cfg, "clean", "gt")?;
    let g_clean = g_clean.context("no coverage")?;
    let t = start.elapsed();
    let detail = format!(
        "cnn: grasp {grasp}/10, cover {cover}/10, clean {clean:.3}; gt: grasp {g_grasp}/10, cover {g_cover}/10, clean {g_clean:.3}; {:.1} min",
        t.as_secs_f64() / 60.0
    );
    ensure!(grasp >= 9 && cover >= 9 && clean >= 0.80, "{detail}");
    ensure!(g_grasp == 10 && g_cover == 10 && g_clean >= 0.95, "{detail}");
    ensure!(t < Duration::from_secs(600), "{detail}");
    Ok(detail)
}

fn along(pred: &[Wrench], truth: &[Wrench], k: &[f64; 6]) -> f64 {
    let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, g)| {
            let (p, g) = (p.to_array(), g.to_array());
            let e: f64 = (0..6).map(|i| (p[i] - g[i]) * k[i]).sum::<f64>() / norm;
            e * e
        })
        .sum();
    (s / pred.len() as f64).sqrt()
}

fn c9_kernel_direction(p: &Pipeline) -> Result<String> {
    let start = Instant::now();
    let k = EffortModel::kernel_direction();
    let a = EffortModel::rank_deficient().matrix;
    let residual: f64 = (0..6).map(|r| (0..6).map(|c| a[(r, c)] * k[c]).sum::<f64>().abs()).fold(0.0, f64::max);
    ensure!(residual < 1e-9, "kernel direction is not in the null space ({residual:.2e})");

    let truth: Vec<Wrench> = p.test.iter().map(|s| s.wrench).collect();
    let mean = vec![MeanGuesser::fit(&p.train_wrenches)?.predict(); truth.len()];
    let mlp: Vec<Wrench> = p.test.iter().map(|s| p.mlp.predict(&s.effort)).collect();
    let cnn: Vec<Wrench> = p.test.par_iter().map(|s| p.model.predict(&s.to_image()).unwrap()).collect();
    let (e_mean, e_mlp, e_cnn) = (along(&mean, &truth, &k), along(&mlp, &truth, &k), along(&cnn, &truth, &k));
    let t = start.elapsed();
    let detail = format!(
        "kernel-direction rmse: mean {e_mean:.3}, effort_mlp {e_mlp:.3} ({:+.1}%), cnn {e_cnn:.3}",
        100.0 * (e_mlp / e_mean - 1.0)
    );
    ensure!((e_mlp - e_mean).abs() <= 0.15 * e_mean, "{detail}");
    ensure!(e_cnn < e_mean && e_cnn < e_mlp, "{detail}");
    ensure!(t < Duration::from_secs(300), "{detail}");
    Ok(detail)
}

fn files(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir)? {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root)?.to_path_buf(), fs::read(&path)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn c10_round_trip(root: &Path) -> Result<String> {
    let start = Instant::now();
    let seq = generate_primitive(
        Primitive::Slide,
        &EnvironmentSpec::procedural("lab"),
        &GripperModel::tendon_actuated(),
        &GenerationSettings::default(),
        &Rng::new(1010),
        3.0,
    )?;
    let seq_dir = root.join("single");
    save_sequence(&seq_dir, &seq)?;
    let back = load_sequence(&seq_dir, &seq.descriptor(), seq.gripper, true)?;
    ensure!(back.frames == seq.frames, "frames differ after save/load");
    ensure!(
        back.images.iter().zip(&seq.images).all(|(a, b)| a.to_bytes() == b.to_bytes()),
        "images differ after save/load"
    );

    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let dir = root.join(name);
        let mut cfg = config_in(&dir)?;
        cfg.set("data.quick", "true")?;
        cfg.set("train.iterations", "100")?;
        cfg.set("task.estimator", "cnn")?;
        let manifest = commands::gen_data(&cfg)?;
        ensure!(Manifest::load(&cfg.path("data.dir"))? == manifest, "manifest round trip");
        manifest.verify()?;
        ensure!(
            generate_dataset(&DatasetConfig::quick(), &dir.join("direct"))?.sequences == manifest.sequences,
            "library and command datasets differ"
        );
        commands::train(&cfg)?;
        for task in ["grasp", "clean"] {
            cfg.set("task.name", task)?;
            cfg.set("task.trials", "2")?;
            cfg.set("task.out", &dir.join("tasks").join(task).to_string_lossy())?;
            commands::run_task(&cfg)?;
        }
        runs.push(dir);
    }
    let a = files(&runs[0])?;
    let b = files(&runs[1])?;
    // config echoes name their own directory
    let strip = |v: Vec<(PathBuf, Vec<u8>)>| -> Vec<(PathBuf, Vec<u8>)> {
        v.into_iter().filter(|(p, _)| !p.ends_with("config.txt")).collect()
    };
    let (a, b) = (strip(a), strip(b));
    let mismatched: Vec<_> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.display().to_string()).collect();
    ensure!(a.len() == b.len() && mismatched.is_empty(), "differing files: {mismatched:?}");
    let t = start.elapsed();
    let ckpt = a.iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "ckpt")).count();
    let summaries = a.iter().filter(|(p, _)| p.ends_with("summary.csv")).count();
    ensure!(ckpt == 1 && summaries == 2, "expected outputs missing");
    let detail = format!("{} files identical across two seeded runs; {:.1} s", a.len(), t.as_secs_f64());
    ensure!(t < Duration::from_secs(300), "{detail}");
    Ok(detail)
}

fn main() -> ExitCode {
    let (root, _guard) = match work_dir() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("cannot create work dir: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let mut results: Vec<(u8, &str, Result<String>)> = vec![
        (4, "mean guesser equals pooled force std", c4_mean_guesser_identity()),
        (6, "flip algebra and mirror rendering", c6_flip_algebra()),
        (7, "admittance step identities and force regulation", c7_wipe_identities()),
        (10, "round trip and determinism", c10_round_trip(&root.join("determinism"))),
    ];

    match build_pipeline(&root.join("pipeline")) {
        Ok(p) => {
            results.push((1, "force error ordering", c1_force_ordering(&p)));
            results.push((2, "torque error ordering", c2_torque_ordering(&p)));
            results.push((3, "depth axis harder than lateral", c3_depth_axis_worse(&p)));
            results.push((5, "gradient check and canary", c5_gradients(&p)));
            results.push((8, "closed-loop tasks", c8_tasks(&p)));
            results.push((9, "effort baseline blind direction", c9_kernel_direction(&p)));
        }
        Err(e) => {
            for (n, name) in [
                (1, "force error ordering"),
                (2, "torque error ordering"),
                (3, "depth axis harder than lateral"),
                (5, "gradient check and canary"),
                (8, "closed-loop tasks"),
                (9, "effort baseline blind direction"),
            ] {
                results.push((n, name, Err(anyhow::anyhow!("pipeline failed: {e:#}"))));
            }
        }
    }

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    println!();
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {e:#}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
