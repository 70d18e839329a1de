//! Closed-loop task controllers driven by wrench estimates: blanket grasp,
//! manikin covering and force-regulated wiping.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::contact::{solve_equilibrium, Equilibrium, SceneSurface, SurfaceShape};
use crate::error::{Error, Result};
use crate::estimator::RegressionModel;
use crate::evaluation::export_timeseries;
use crate::gripper::{GripperConfiguration, GripperModel, FINGERS};
use crate::pose::Pose;
use crate::renderer::{render, CameraModel, EnvironmentSpec};
use crate::rng::Rng;
use crate::wrench::{Vec3, Wrench};

/// Meters of normal correction per newton of force error.
pub const ADMITTANCE_GAIN: f64 = 0.002;
/// Below this estimated force magnitude contact counts as lost.
pub const CONTACT_LOST_FORCE: f64 = 1.0;
/// One control step per camera frame.
pub const CONTROL_DT: f64 = 0.1;

const TIP_DROP: f64 = 0.04;

/// One admittance step. Returns `None` when `force` is too small to define
/// a surface normal.
pub fn wipe_step(position: &Vec3, force: &Vec3, d: &Vec3, k_f: f64, gain: f64) -> Option<Vec3> {
    let magnitude = force.norm();
    if magnitude <= CONTACT_LOST_FORCE {
        return None;
    }
    let n = force / magnitude;
    let tangential = d - n * d.dot(&n);
    Some(position + n * (gain * (magnitude - k_f)) + tangential)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WipeConfig {
    pub k_f: f64,
    pub step: f64,
    pub start_force: f64,
    pub timeout: f64,
    /// Lowest allowed wrist height, world meters. Surfaces top out at zero.
    pub min_height: f64,
    pub wipe_radius: f64,
    pub min_clean_force: f64,
    pub gain: f64,
    /// Descent per step while searching for the surface.
    pub approach_step: f64,
    pub max_steps: usize,
}

impl Default for WipeConfig {
    fn default() -> Self {
        Self {
            k_f: 5.0,
            step: 0.02,
            start_force: 5.0,
            timeout: 3.0,
            min_height: -0.03,
            wipe_radius: 0.015,
            min_clean_force: 1.0,
            gain: ADMITTANCE_GAIN,
            approach_step: 0.005,
            max_steps: 600,
        }
    }
}

impl WipeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_f > 0.0) || !(self.step > 0.0) || !(self.timeout > 0.0) {
            return Err(Error::Config("wipe needs k_F > 0, step > 0 and timeout > 0".into()));
        }
        if !(self.gain > 0.0) || !(self.approach_step > 0.0) || !(self.wipe_radius > 0.0) {
            return Err(Error::Config("wipe gain, approach step and radius must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("wipe needs a step budget".into()));
        }
        Ok(())
    }
}

/// Grid of marker cells on a surface. Cells only ever go from dirty to clean.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerPatch {
    pub rows: usize,
    pub cols: usize,
    centers: Vec<Vec3>,
    cleaned: Vec<bool>,
}

impl MarkerPatch {
    /// `rows` cells along the axis over `length`, `cols` cells around the
    /// circumference over an arc of `arc_width`, centered on the top line.
    pub fn on_cylinder(
        axis_point: &Vec3,
        axis_dir: &Vec3,
        radius: f64,
        length: f64,
        arc_width: f64,
        rows: usize,
        cols: usize,
    ) -> Self {
        let axis = axis_dir.normalize();
        let up = (Vec3::z() - axis * axis.z).normalize();
        let side = axis.cross(&up);
        let mut centers = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let along = length * ((r as f64 + 0.5) / rows as f64 - 0.5);
            for c in 0..cols {
                let angle = arc_width * ((c as f64 + 0.5) / cols as f64 - 0.5) / radius;
                let radial = up * angle.cos() + side * angle.sin();
                centers.push(axis_point + axis * along + radial * radius);
            }
        }
        Self::from_centers(rows, cols, centers)
    }

    /// Flat strip of `length` along `along_dir` and `width` across it.
    pub fn on_plane(center: &Vec3, along_dir: &Vec3, length: f64, width: f64, rows: usize, cols: usize) -> Self {
        let along = along_dir.normalize();
        let across = Vec3::z().cross(&along);
        let mut centers = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let a = length * ((r as f64 + 0.5) / rows as f64 - 0.5);
            for c in 0..cols {
                let b = width * ((c as f64 + 0.5) / cols as f64 - 0.5);
                centers.push(center + along * a + across * b);
            }
        }
        Self::from_centers(rows, cols, centers)
    }

    fn from_centers(rows: usize, cols: usize, centers: Vec<Vec3>) -> Self {
        let cleaned = vec![false; centers.len()];
        Self {
            rows,
            cols,
            centers,
            cleaned,
        }
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn is_cleaned(&self, cell: usize) -> bool {
        self.cleaned[cell]
    }

    /// Marks every cell within `radius` of the segment `a`-`b`.
    pub fn wipe_segment(&mut self, a: &Vec3, b: &Vec3, radius: f64) {
        let ab = b - a;
        let len2 = ab.norm_squared();
        for (c, done) in self.centers.iter().zip(self.cleaned.iter_mut()) {
            if *done {
                continue;
            }
            let t = if len2 > 0.0 { ((c - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            if (a + ab * t - c).norm() <= radius {
                *done = true;
            }
        }
    }

    pub fn coverage(&self) -> f64 {
        self.cleaned.iter().filter(|&&c| c).count() as f64 / self.cleaned.len().max(1) as f64
    }
}

/// What an estimator may look at on one control step.
pub struct Observation<'a> {
    pub pose: &'a Pose,
    pub config: &'a GripperConfiguration,
    pub truth: &'a Wrench,
}

pub trait WrenchEstimator {
    fn name(&self) -> &str;

    /// Called at the start of each trial so runs depend only on the seed.
    fn reset(&mut self, _trial_seed: u64) {}

    fn estimate(&mut self, obs: &Observation<'_>) -> Result<Wrench>;
}

/// Passes the simulator's wrench through unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct GroundTruthEstimator;

impl WrenchEstimator for GroundTruthEstimator {
    fn name(&self) -> &str {
        "ground_truth"
    }

    fn estimate(&mut self, obs: &Observation<'_>) -> Result<Wrench> {
        Ok(*obs.truth)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroEstimator;

impl WrenchEstimator for ZeroEstimator {
    fn name(&self) -> &str {
        "zero"
    }

    fn estimate(&mut self, _obs: &Observation<'_>) -> Result<Wrench> {
        Ok(Wrench::ZERO)
    }
}

/// Renders the current gripper state and runs the trained regressor on it.
#[derive(Debug, Clone)]
pub struct VisualEstimator {
    model: RegressionModel,
    camera: CameraModel,
    base_env: EnvironmentSpec,
    env: EnvironmentSpec,
    rng: Rng,
    frame: u64,
}

impl VisualEstimator {
    pub fn new(model: RegressionModel, camera: CameraModel, env: EnvironmentSpec) -> Self {
        Self {
            model,
            camera,
            env: env.clone(),
            base_env: env,
            rng: Rng::new(0),
            frame: 0,
        }
    }
}

impl WrenchEstimator for VisualEstimator {
    fn name(&self) -> &str {
        "estimator"
    }

    fn reset(&mut self, trial_seed: u64) {
        let root = Rng::new(trial_seed).child("camera");
        self.env = self.base_env.varied(&mut root.child("appearance"));
        self.rng = root.child("render");
        self.frame = 0;
    }

    fn estimate(&mut self, obs: &Observation<'_>) -> Result<Wrench> {
        let mut rng = self.rng.child_index("frame", self.frame);
        self.frame += 1;
        let image = render(obs.config, &self.camera, &self.env, &mut rng);
        self.model.predict(&image)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    GraspBlanket,
    CoverManikin,
    Cleaning,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::GraspBlanket, TaskKind::CoverManikin, TaskKind::Cleaning];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::GraspBlanket => "grasp_blanket",
            TaskKind::CoverManikin => "cover_manikin",
            TaskKind::Cleaning => "cleaning",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    /// Accepts the full names and the short forms `grasp`, `cover`, `clean`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grasp" => return Ok(TaskKind::GraspBlanket),
            "cover" => return Ok(TaskKind::CoverManikin),
            "clean" => return Ok(TaskKind::Cleaning),
            _ => {}
        }
        TaskKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown task `{s}` (valid: grasp, cover, clean, grasp_blanket, cover_manikin, cleaning)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub t: f64,
    pub pose: Pose,
    pub estimate: Wrench,
    pub truth: Wrench,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task: TaskKind,
    pub success: bool,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
    /// Cleaned fraction, cleaning only.
    pub coverage: Option<f64>,
    /// Coverage after each step, cleaning only.
    pub coverage_history: Vec<f64>,
    pub outcome: String,
}

impl TaskResult {
    pub fn write_trace(&self, path: &Path) -> Result<usize> {
        let times: Vec<f64> = self.trace.iter().map(|e| e.t).collect();
        let truth: Vec<Wrench> = self.trace.iter().map(|e| e.truth).collect();
        let est: Vec<Wrench> = self.trace.iter().map(|e| e.estimate).collect();
        export_timeseries(path, &times, &truth, &est)
    }
}

/// Steps the scene and the estimator together and records the trace.
struct Episode<'a> {
    gripper: &'a GripperModel,
    surface: SceneSurface,
    estimator: &'a mut dyn WrenchEstimator,
    trace: Vec<TraceEntry>,
    last_position: Option<Vec3>,
}

impl<'a> Episode<'a> {
    fn new(
        gripper: &'a GripperModel,
        surface: SceneSurface,
        estimator: &'a mut dyn WrenchEstimator,
        seed: u64,
    ) -> Self {
        estimator.reset(seed);
        Self {
            gripper,
            surface,
            estimator,
            trace: Vec::new(),
            last_position: None,
        }
    }

    fn observe(&mut self, pose: Pose, aperture: f64) -> Result<(Equilibrium, Wrench)> {
        let velocity = self.last_position.map_or(Vec3::zeros(), |p| (pose.position - p) / CONTROL_DT);
        self.last_position = Some(pose.position);
        let eq = solve_equilibrium(&self.gripper.with_aperture(aperture), &pose, &self.surface, &velocity);
        let estimate = self.estimator.estimate(&Observation {
            pose: &pose,
            config: &eq.config,
            truth: &eq.wrench,
        })?;
        self.trace.push(TraceEntry {
            t: self.trace.len() as f64 * CONTROL_DT,
            pose,
            estimate,
            truth: eq.wrench,
        });
        Ok((eq, estimate))
    }

    fn finish(self, task: TaskKind, seed: u64, success: bool, outcome: &str) -> TaskResult {
        TaskResult {
            task,
            success,
            seed,
            trace: self.trace,
            coverage: None,
            coverage_history: Vec::new(),
            outcome: outcome.to_string(),
        }
    }
}

fn lowest_tip(eq: &Equilibrium, pose: &Pose) -> f64 {
    (0..FINGERS)
        .map(|f| pose.point_to_world(&eq.config.tip(f)).z)
        .fold(f64::INFINITY, f64::min)
}

/// Estimated vertical force that ends the descent, N.
pub const GRASP_TRIGGER: f64 = 3.0;
pub const GRASP_DESCENT_STEP: f64 = 0.005;
/// Consecutive estimates above the trigger needed before closing.
pub const GRASP_CONFIRM: usize = 2;
/// Fingertips must be at most this far above the blanket top when closing.
pub const GRASP_DISTANCE: f64 = 0.005;
pub const BLANKET_DEPTH: f64 = 0.04;
pub const LIFT_HEIGHT: f64 = 0.15;
/// Largest load the closed fingers hold before the blanket slips out.
pub const GRIP_LIMIT: f64 = 10.0;

/// Descends onto a soft pile until the estimated vertical force exceeds the
/// trigger, closes and lifts.
pub fn run_grasp_blanket(
    gripper: &GripperModel,
    estimator: &mut dyn WrenchEstimator,
    seed: u64,
) -> Result<TaskResult> {
    let mut rng = Rng::new(seed).child("grasp_blanket");
    let rest_height = rng.uniform(-0.02, 0.02);
    let pile = SceneSurface::new(
        SurfaceShape::SpringPile {
            rest_height,
            stiffness: rng.uniform(50.0, 120.0) * gripper.contact_stiffness_scale(),
        },
        rng.uniform(0.2, 0.6),
        1.0,
    )?;
    let floor = rest_height - BLANKET_DEPTH;
    let yaw = rng.uniform(-0.3, 0.3);
    let mut position = Vec3::new(
        rng.uniform(-0.05, 0.05),
        rng.uniform(-0.05, 0.05),
        rest_height + TIP_DROP + rng.uniform(0.02, 0.04),
    );
    let mut ep = Episode::new(gripper, pile, estimator, seed);

    let mut above = 0;
    let tip_height = loop {
        let pose = Pose::new(position, yaw);
        let (eq, est) = ep.observe(pose, 1.0)?;
        let tip = lowest_tip(&eq, &pose);
        above = if est.force.z > GRASP_TRIGGER { above + 1 } else { 0 };
        if above >= GRASP_CONFIRM {
            break tip;
        }
        if tip < floor {
            return Ok(ep.finish(TaskKind::GraspBlanket, seed, false, "floor contact"));
        }
        position.z -= GRASP_DESCENT_STEP;
    };
    ep.observe(Pose::new(position, yaw), 0.0)?;
    let latched = tip_height <= rest_height + GRASP_DISTANCE;
    if !latched {
        return Ok(ep.finish(TaskKind::GraspBlanket, seed, false, "closed above the blanket"));
    }

    // The held blanket hangs from the grasp point like a slack cord.
    let grasp = Pose::new(position, yaw).point_to_world(&gripper.with_aperture(0.0).rest_configuration().grasp_point());
    ep.surface = SceneSurface::new(
        SurfaceShape::Tether {
            anchor: grasp,
            slack_length: 0.1,
            stiffness: 20.0,
        },
        0.0,
        1.0,
    )?;
    let lift_steps = 5;
    for _ in 0..lift_steps {
        position.z += LIFT_HEIGHT / lift_steps as f64;
        let (eq, _) = ep.observe(Pose::new(position, yaw), 0.0)?;
        if eq.contact.tension > GRIP_LIMIT {
            return Ok(ep.finish(TaskKind::GraspBlanket, seed, false, "blanket slipped"));
        }
    }
    Ok(ep.finish(TaskKind::GraspBlanket, seed, true, "lifted"))
}

/// Estimated horizontal force that triggers the release, N.
pub const COVER_TRIGGER: f64 = 2.5;
pub const COVER_STEP: f64 = 0.01;
pub const SLIP_LIMIT: f64 = 10.0;

/// Pulls a tethered blanket away from its anchor until the estimated
/// horizontal force exceeds the trigger, then lowers and releases.
pub fn run_cover_manikin(
    gripper: &GripperModel,
    estimator: &mut dyn WrenchEstimator,
    seed: u64,
) -> Result<TaskResult> {
    let mut rng = Rng::new(seed).child("cover_manikin");
    let aperture = 0.2;
    let yaw = rng.uniform(-0.3, 0.3);
    let mut position = Vec3::new(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.1));
    let grasp = Pose::new(position, yaw).point_to_world(&gripper.with_aperture(aperture).rest_configuration().grasp_point());
    let angle = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
    let dir = Vec3::new(angle.cos(), angle.sin(), 0.0);
    let slack = rng.uniform(0.2, 0.4);
    let stiffness = rng.uniform(30.0, 120.0);
    let anchor = grasp - dir * (slack - rng.uniform(0.03, 0.06));
    let tether = SceneSurface::new(
        SurfaceShape::Tether {
            anchor,
            slack_length: slack,
            stiffness,
        },
        0.0,
        1.0,
    )?;
    let mut ep = Episode::new(gripper, tether, estimator, seed);

    let mut engaged = false;
    let max_steps = ((slack + SLIP_LIMIT / stiffness) / COVER_STEP) as usize + 20;
    for _ in 0..max_steps {
        let (eq, est) = ep.observe(Pose::new(position, yaw), aperture)?;
        if eq.contact.tension > SLIP_LIMIT {
            return Ok(ep.finish(TaskKind::CoverManikin, seed, false, "slip limit exceeded"));
        }
        engaged |= eq.contact.tension > 0.0;
        if est.force.x.hypot(est.force.y) > COVER_TRIGGER {
            position.z -= 0.03;
            ep.observe(Pose::new(position, yaw), 1.0)?;
            let outcome = if engaged { "released" } else { "released before engagement" };
            return Ok(ep.finish(TaskKind::CoverManikin, seed, engaged, outcome));
        }
        position += dir * COVER_STEP;
    }
    Ok(ep.finish(TaskKind::CoverManikin, seed, false, "never triggered"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WipeSurface {
    /// Finite cylinder limb of the given radius in meters.
    Cylinder(f64),
    Plane,
}

pub const ARM_RADIUS: f64 = 0.05;
pub const LEG_RADIUS: f64 = 0.08;
const LIMB_HALF_LENGTH: f64 = 0.15;
const PATCH_LENGTH: f64 = 0.2;
const PATCH_WIDTH: f64 = 0.03;
const PATCH_MARGIN: f64 = 0.02;
/// Half-open fingers put both pads on the patch, 12 mm either side of center.
const WIPE_APERTURE: f64 = 0.4;
const PATCH_ROWS: usize = 20;
const PATCH_COLS: usize = 10;

enum WipePhase {
    Approach,
    Wipe { lost_for: f64 },
}

/// Lowers onto the surface, then wipes back and forth along the limb axis
/// under force regulation until the step budget runs out.
pub fn run_cleaning(
    gripper: &GripperModel,
    estimator: &mut dyn WrenchEstimator,
    surface_kind: WipeSurface,
    config: &WipeConfig,
    seed: u64,
) -> Result<TaskResult> {
    config.validate()?;
    let mut rng = Rng::new(seed).child("cleaning");
    let yaw = rng.uniform(-0.3, 0.3);
    let start = Pose::new(Vec3::new(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0.0), yaw);
    let axis = start.rotate_to_world(&Vec3::y());
    let mut d = axis * config.step;
    if rng.coin(0.5) {
        d = -d;
    }
    // the wipe starts just short of one end of the patch and heads along d
    let tip_start = start.point_to_world(&gripper.with_aperture(WIPE_APERTURE).rest_configuration().grasp_point());
    let center = Vec3::new(tip_start.x, tip_start.y, 0.0) + d.normalize() * (PATCH_LENGTH / 2.0 + PATCH_MARGIN);
    // Friction tilts the measured force away from the normal, and the
    // tangential step then lifts by about step * mu per step, so the
    // regulated force settles near k_F - step * mu / gain.
    let mu = rng.uniform(0.02, 0.1);
    let k = rng.uniform(150.0, 220.0) * gripper.contact_stiffness_scale();
    let (surface, mut patch) = match surface_kind {
        WipeSurface::Cylinder(radius) => {
            let lateral = start.rotate_to_world(&Vec3::x()) * rng.uniform(-0.003, 0.003);
            let axis_point = center + lateral - Vec3::z() * radius;
            (
                SceneSurface::new(
                    SurfaceShape::Cylinder {
                        axis_point,
                        axis_dir: axis,
                        radius,
                        half_length: Some(LIMB_HALF_LENGTH),
                    },
                    mu,
                    k,
                )?,
                MarkerPatch::on_cylinder(&axis_point, &axis, radius, PATCH_LENGTH, PATCH_WIDTH, PATCH_ROWS, PATCH_COLS),
            )
        }
        WipeSurface::Plane => (
            SceneSurface::plane(0.0, mu, k)?,
            MarkerPatch::on_plane(&center, &axis, PATCH_LENGTH, PATCH_WIDTH, PATCH_ROWS, PATCH_COLS),
        ),
    };
    let aperture = WIPE_APERTURE;
    let start_height = TIP_DROP + rng.uniform(0.01, 0.02);
    let mut position = Vec3::new(start.position.x, start.position.y, start_height);
    let surface_for_patch = surface.clone();
    let mut ep = Episode::new(gripper, surface, estimator, seed);
    let mut phase = WipePhase::Approach;
    let mut last_contact = position;
    let mut previous: [Option<Vec3>; FINGERS] = [None; FINGERS];
    let mut history = Vec::with_capacity(config.max_steps);

    for _ in 0..config.max_steps {
        let pose = Pose::new(position, yaw);
        let (eq, est) = ep.observe(pose, aperture)?;

        let mut current: [Option<Vec3>; FINGERS] = [None; FINGERS];
        for c in &eq.contact.contacts {
            if c.normal_force >= config.min_clean_force {
                current[c.finger] = Some(surface_for_patch.project_to_surface(&c.point));
            }
        }
        for f in 0..FINGERS {
            if let Some(b) = current[f] {
                let a = previous[f].unwrap_or(b);
                patch.wipe_segment(&a, &b, config.wipe_radius);
            }
        }
        previous = current;
        history.push(patch.coverage());

        let force = pose.rotate_to_world(&est.force);
        let mut reverse = false;
        match &mut phase {
            WipePhase::Approach => {
                if force.norm() > config.start_force {
                    phase = WipePhase::Wipe { lost_for: 0.0 };
                    last_contact = position;
                    position = wipe_step(&position, &force, &d, config.k_f, config.gain).unwrap_or(position);
                } else {
                    position.z -= config.approach_step;
                    reverse = position.z < config.min_height;
                }
            }
            WipePhase::Wipe { lost_for } => match wipe_step(&position, &force, &d, config.k_f, config.gain) {
                Some(next) => {
                    *lost_for = 0.0;
                    last_contact = position;
                    position = next;
                }
                None => {
                    *lost_for += CONTROL_DT;
                    position += d - Vec3::z() * config.approach_step;
                    reverse = *lost_for > config.timeout;
                }
            },
        }
        if position.z < config.min_height {
            reverse = true;
        }
        if reverse {
            d = -d;
            position = last_contact + Vec3::z() * (start_height - TIP_DROP);
            phase = WipePhase::Approach;
        }
    }

    let coverage = patch.coverage();
    let mut result = ep.finish(TaskKind::Cleaning, seed, true, "budget exhausted");
    result.coverage = Some(coverage);
    result.coverage_history = history;
    Ok(result)
}

/// Runs `trials` seeded trials of one task. Cleaning alternates arm and leg
/// radii.
pub fn run_trials(
    task: TaskKind,
    gripper: &GripperModel,
    estimator: &mut dyn WrenchEstimator,
    wipe: &WipeConfig,
    seed: u64,
    trials: usize,
) -> Result<Vec<TaskResult>> {
    let root = Rng::new(seed).child(task.as_str());
    (0..trials)
        .map(|i| {
            let trial_seed = root.child_index("trial", i as u64).seed();
            match task {
                TaskKind::GraspBlanket => run_grasp_blanket(gripper, estimator, trial_seed),
                TaskKind::CoverManikin => run_cover_manikin(gripper, estimator, trial_seed),
                TaskKind::Cleaning => {
                    let radius = if i % 2 == 0 { ARM_RADIUS } else { LEG_RADIUS };
                    run_cleaning(gripper, estimator, WipeSurface::Cylinder(radius), wipe, trial_seed)
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSummary {
    pub task: TaskKind,
    pub trials: usize,
    pub successes: usize,
    pub mean_coverage: Option<f64>,
}

pub const SUMMARY_HEADER: &str = "task,trials,successes,mean_coverage";

impl TaskSummary {
    pub fn from_results(task: TaskKind, results: &[TaskResult]) -> Self {
        let coverages: Vec<f64> = results.iter().filter_map(|r| r.coverage).collect();
        Self {
            task,
            trials: results.len(),
            successes: results.iter().filter(|r| r.success).count(),
            mean_coverage: (!coverages.is_empty()).then(|| coverages.iter().sum::<f64>() / coverages.len() as f64),
        }
    }

    pub fn csv_row(&self) -> String {
        let cov = self.mean_coverage.map_or("-".to_string(), |c| format!("{c:.4}"));
        format!("{},{},{},{}", self.task, self.trials, self.successes, cov)
    }
}

pub fn summary_text(summaries: &[TaskSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for t in summaries {
        s += &t.csv_row();
        s.push('\n');
    }
    s
}

pub fn write_summary(path: &Path, summaries: &[TaskSummary]) -> Result<()> {
    fs::write(path, summary_text(summaries))?;
    Ok(())
}
