//! Scripted interaction primitives.
//!
//! Every primitive is a sequence of segments. A segment owns one scene
//! surface and a small controller that moves the wrist; the physics runs at
//! the wrench rate and the camera samples every n-th step.

use std::path::Path;

use rayon::prelude::*;

use super::io::{save_sequence, Manifest, SequenceDescriptor, MANIFEST_VERSION};
use super::sensor::{apply_sensor_model, synchronize, EffortModel, SensorNoise};
use super::{quantize, Frame, Primitive, SequenceRecording};
use crate::contact::{solve_equilibrium, SceneSurface, SurfaceShape};
use crate::error::{Error, Result};
use crate::gripper::{rest_skeleton, GripperConfiguration, GripperKind, GripperModel, NODES_PER_FINGER};
use crate::pose::Pose;
use crate::renderer::{render, CameraModel, EnvironmentSpec};
use crate::rng::{derive_seed, Rng};
use crate::wrench::{Vec3, Wrench};

pub const DEFAULT_ENVIRONMENTS: [&str; 4] = ["lab", "office_a", "office_b", "home"];

/// Height of the fingertips below the wrist at rest.
const TIP_DROP: f64 = 0.04;
/// Per-step admittance gain used by the scripted force hold, m/N.
const HOLD_GAIN: f64 = 0.003;
const FREE_TIME: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSettings {
    pub image_rate: f64,
    pub wrench_rate: f64,
    pub noise: SensorNoise,
    pub effort: EffortModel,
    pub camera: CameraModel,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            image_rate: 10.0,
            wrench_rate: 100.0,
            noise: SensorNoise::default(),
            effort: EffortModel::rank_deficient(),
            camera: CameraModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Command {
    position: Vec3,
    yaw: f64,
    aperture: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ContactPhase {
    Free,
    Approach,
    Hold,
    Retract,
}

/// Descend onto a surface, regulate the contact force, optionally slide.
#[derive(Debug, Clone)]
struct ContactScript {
    xy: Vec3,
    yaw: f64,
    aperture: f64,
    z: f64,
    speed: f64,
    target: f64,
    target_wobble: f64,
    slide: Option<(Vec3, f64, f64)>,
    retract_at: Option<f64>,
    phase: ContactPhase,
    hold_since: f64,
}

impl ContactScript {
    fn step(&mut self, t: f64, dt: f64, force: f64) -> Command {
        match self.phase {
            ContactPhase::Free if t >= FREE_TIME => self.phase = ContactPhase::Approach,
            ContactPhase::Approach if force >= self.target => {
                self.phase = ContactPhase::Hold;
                self.hold_since = t;
            }
            _ => {}
        }
        if let Some(r) = self.retract_at {
            if t >= r {
                self.phase = ContactPhase::Retract;
            }
        }
        match self.phase {
            ContactPhase::Free => {}
            ContactPhase::Approach => self.z -= self.speed * dt,
            ContactPhase::Hold => {
                let wobble = 1.0 + self.target_wobble * (1.3 * (t - self.hold_since)).sin();
                self.z += (HOLD_GAIN * (force - self.target * wobble)).max(-self.speed * dt);
                if let Some((dir, speed, period)) = self.slide {
                    let since = t - self.hold_since - 0.5;
                    if since > 0.0 {
                        let sign = if ((since / period) as i64) % 2 == 0 { 1.0 } else { -1.0 };
                        self.xy += dir * (sign * speed * dt);
                    }
                }
            }
            ContactPhase::Retract => self.z += 0.04 * dt,
        }
        Command {
            position: Vec3::new(self.xy.x, self.xy.y, self.z),
            yaw: self.yaw,
            aperture: self.aperture,
        }
    }
}

/// Hold an object on a tether and move along waypoints.
#[derive(Debug, Clone)]
struct PullScript {
    start: Vec3,
    yaw: f64,
    open: f64,
    closed: f64,
    /// (time, offset from start); linear interpolation, held after the last.
    waypoints: Vec<(f64, Vec3)>,
    release_at: f64,
}

impl PullScript {
    fn step(&mut self, t: f64) -> Command {
        let aperture = if t < FREE_TIME {
            self.open
        } else if t < FREE_TIME + 0.5 {
            let s = (t - FREE_TIME) / 0.5;
            self.open + (self.closed - self.open) * s
        } else if t < self.release_at {
            self.closed
        } else {
            self.open
        };
        let mut offset = Vec3::zeros();
        for w in self.waypoints.windows(2) {
            let ((t0, a), (t1, b)) = (w[0], w[1]);
            if t >= t0 && t < t1 {
                let s = (t - t0) / (t1 - t0);
                offset = a + (b - a) * s;
                break;
            }
            if t >= t1 {
                offset = b;
            }
        }
        Command {
            position: self.start + offset,
            yaw: self.yaw,
            aperture,
        }
    }
}

#[derive(Debug, Clone)]
enum Script {
    Contact(ContactScript),
    Pull(PullScript),
}

#[derive(Debug, Clone)]
struct Segment {
    surface: SceneSurface,
    script: Script,
    duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SegmentKind {
    PushPlane,
    PushCylinder,
    PushPile,
    Slide,
    Lift,
    Drag,
}

struct SegmentBuilder<'a> {
    model: &'a GripperModel,
    stiffness_scale: f64,
}

impl SegmentBuilder<'_> {
    fn new(model: &GripperModel) -> SegmentBuilder<'_> {
        SegmentBuilder {
            model,
            stiffness_scale: model.contact_stiffness_scale(),
        }
    }

    fn build(&self, kind: SegmentKind, duration: f64, hold_to_end: bool, rng: &mut Rng) -> Segment {
        match kind {
            SegmentKind::PushPlane
            | SegmentKind::PushCylinder
            | SegmentKind::PushPile
            | SegmentKind::Slide => self.contact(kind, duration, hold_to_end, rng),
            SegmentKind::Lift | SegmentKind::Drag => self.pull(kind, duration, rng),
        }
    }

    fn contact(&self, kind: SegmentKind, duration: f64, hold_to_end: bool, rng: &mut Rng) -> Segment {
        let aperture = rng.uniform(0.2, 1.0);
        let yaw = rng.uniform(-0.3, 0.3);
        let xy = Vec3::new(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0.0);
        let top = rng.uniform(-0.1, 0.1);
        let k = rng.uniform(80.0, 150.0) * self.stiffness_scale;
        let mu = rng.uniform(0.1, 0.8);
        let surface = match kind {
            SegmentKind::PushCylinder => {
                // stiffer and larger than a plane so the penetration stays
                // well inside the radius
                let radius = rng.uniform(0.05, 0.1);
                let k = rng.uniform(150.0, 220.0) * self.stiffness_scale;
                let tip_x = rest_skeleton(aperture)[1][NODES_PER_FINGER - 1].x;
                // either under one fingertip or straddled by both
                let lateral = if rng.coin(0.5) {
                    tip_x * rng.sign() + rng.uniform(-0.3, 0.3) * radius
                } else {
                    rng.uniform(-0.005, 0.005)
                };
                let pose = Pose::new(xy, yaw);
                let axis_point = pose.point_to_world(&Vec3::new(lateral, 0.09, 0.0));
                SceneSurface::new(
                    SurfaceShape::Cylinder {
                        axis_point: Vec3::new(axis_point.x, axis_point.y, top - radius),
                        axis_dir: pose.rotate_to_world(&Vec3::y()),
                        radius,
                        half_length: None,
                    },
                    mu,
                    k,
                )
            }
            SegmentKind::PushPile => SceneSurface::new(
                SurfaceShape::SpringPile {
                    rest_height: top,
                    stiffness: rng.uniform(50.0, 120.0) * self.stiffness_scale,
                },
                mu,
                k,
            ),
            _ => SceneSurface::plane(top, mu, k),
        }
        .expect("generated surface parameters are valid");

        let slide = (kind == SegmentKind::Slide).then(|| {
            let angle = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
            (
                Vec3::new(angle.cos(), angle.sin(), 0.0),
                rng.uniform(0.01, 0.05),
                rng.uniform(0.8, 2.5),
            )
        });
        let retract_at = (!hold_to_end).then(|| duration * rng.uniform(0.75, 0.85));
        let target_wobble = if hold_to_end && kind != SegmentKind::Slide {
            0.0
        } else {
            rng.uniform(0.0, 0.3)
        };
        Segment {
            surface,
            script: Script::Contact(ContactScript {
                xy,
                yaw,
                aperture,
                z: top + rng.uniform(0.01, 0.03) + TIP_DROP,
                speed: rng.uniform(0.02, 0.04),
                target: rng.uniform(1.0, 8.0),
                target_wobble,
                slide,
                retract_at,
                phase: ContactPhase::Free,
                hold_since: 0.0,
            }),
            duration,
        }
    }

    fn pull(&self, kind: SegmentKind, duration: f64, rng: &mut Rng) -> Segment {
        let open = rng.uniform(0.6, 1.0);
        let closed = rng.uniform(0.0, 0.4);
        let yaw = rng.uniform(-0.3, 0.3);
        let start = Vec3::new(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.1));
        let pose = Pose::new(start, yaw);
        let grasp = pose.point_to_world(&self.model.with_aperture(closed).rest_configuration().grasp_point());
        let stiffness = rng.uniform(30.0, 120.0);
        let peak_force = if kind == SegmentKind::Drag { rng.uniform(2.0, 10.0) } else { rng.uniform(1.0, 8.0) };
        let (dir, slack) = match kind {
            SegmentKind::Lift => {
                let d = Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), -rng.uniform(0.3, 1.0)).normalize();
                (d, rng.uniform(0.02, 0.2))
            }
            _ => {
                let angle = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                let d = Vec3::new(angle.cos(), angle.sin(), rng.uniform(-0.2, 0.2)).normalize();
                (d, rng.uniform(0.05, 0.5))
            }
        };
        let anchor = grasp + dir * slack;
        let stretch = peak_force / stiffness;
        // move away from the anchor, wander, come back
        let away = -dir * stretch;
        let t_close = FREE_TIME + 0.6;
        let t_peak = t_close + duration * rng.uniform(0.2, 0.3);
        let t_wander = t_peak + duration * 0.2;
        let t_back = duration * rng.uniform(0.8, 0.85);
        let wander = Vec3::new(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
        let waypoints = vec![
            (0.0, Vec3::zeros()),
            (t_close, Vec3::zeros()),
            (t_peak, away),
            (t_wander, away * rng.uniform(0.7, 1.0) + wander),
            (t_back, Vec3::zeros()),
        ];
        Segment {
            surface: SceneSurface::new(
                SurfaceShape::Tether {
                    anchor,
                    slack_length: slack,
                    stiffness,
                },
                0.0,
                1.0,
            )
            .expect("generated tether is valid"),
            script: Script::Pull(PullScript {
                start,
                yaw,
                open,
                closed,
                waypoints,
                release_at: t_back + 0.2,
            }),
            duration,
        }
    }
}

fn pick(rng: &mut Rng, weighted: &[(SegmentKind, f64)]) -> SegmentKind {
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let mut r = rng.uniform(0.0, total);
    for (k, w) in weighted {
        if r < *w {
            return *k;
        }
        r -= w;
    }
    weighted[weighted.len() - 1].0
}

fn plan_segments(kind: Primitive, model: &GripperModel, duration: f64, rng: &mut Rng) -> Vec<Segment> {
    let b = SegmentBuilder::new(model);
    match kind {
        Primitive::Push => {
            let k = pick(
                rng,
                &[
                    (SegmentKind::PushPlane, 0.6),
                    (SegmentKind::PushCylinder, 0.25),
                    (SegmentKind::PushPile, 0.15),
                ],
            );
            vec![b.build(k, duration, true, rng)]
        }
        Primitive::Slide => vec![b.build(SegmentKind::Slide, duration, true, rng)],
        Primitive::Grasp => vec![b.build(SegmentKind::Lift, duration, false, rng)],
        Primitive::ManipulateObject | Primitive::ManipulateScene => {
            let weights: &[(SegmentKind, f64)] = if kind == Primitive::ManipulateObject {
                &[
                    (SegmentKind::PushPlane, 0.15),
                    (SegmentKind::PushCylinder, 0.1),
                    (SegmentKind::Slide, 0.15),
                    (SegmentKind::Lift, 0.35),
                    (SegmentKind::Drag, 0.25),
                ]
            } else {
                &[
                    (SegmentKind::PushCylinder, 0.25),
                    (SegmentKind::PushPile, 0.1),
                    (SegmentKind::Slide, 0.2),
                    (SegmentKind::Drag, 0.45),
                ]
            };
            let n = if duration >= 6.0 { 2 + rng.below(2) } else { 1 };
            (0..n)
                .map(|_| {
                    let k = pick(rng, weights);
                    b.build(k, duration / n as f64, false, rng)
                })
                .collect()
        }
    }
}

struct Rollout {
    raw: Vec<Wrench>,
    times: Vec<f64>,
    snapshots: Vec<(f64, Pose, GripperConfiguration, Wrench)>,
}

/// Runs the physics at `dt`, keeping every `snapshot_every`-th state.
fn simulate(
    segments: &mut [Segment],
    model: &GripperModel,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
    mut jitter_rng: Option<&mut Rng>,
) -> Rollout {
    let mut out = Rollout {
        raw: Vec::with_capacity(n_steps),
        times: Vec::with_capacity(n_steps),
        snapshots: Vec::with_capacity(n_steps / snapshot_every + 1),
    };
    let mut seg_index = 0;
    let mut seg_start = 0.0;
    let mut last_force = 0.0;
    let mut last_position: Option<Vec3> = None;
    let mut offset = Vec3::zeros();

    for k in 0..n_steps {
        let t = k as f64 * dt;
        while seg_index + 1 < segments.len() && t - seg_start >= segments[seg_index].duration {
            seg_start += segments[seg_index].duration;
            seg_index += 1;
            last_force = 0.0;
            last_position = None;
        }
        let seg = &mut segments[seg_index];
        let local = t - seg_start;
        let cmd = match &mut seg.script {
            Script::Contact(c) => c.step(local, dt, last_force),
            Script::Pull(p) => p.step(local),
        };
        if let Some(r) = jitter_rng.as_deref_mut() {
            offset += Vec3::new(r.gaussian(2e-4), r.gaussian(2e-4), 0.0);
            offset *= 0.98;
        }
        let position = cmd.position + offset;
        let velocity = last_position.map_or(Vec3::zeros(), |p| (position - p) / dt);
        last_position = Some(position);
        let pose = Pose::new(position, cmd.yaw);
        let gripper = model.with_aperture(cmd.aperture);
        let eq = solve_equilibrium(&gripper, &pose, &seg.surface, &velocity);
        last_force = eq.wrench.force.norm();
        out.raw.push(eq.wrench);
        out.times.push(t);
        if k % snapshot_every == 0 {
            out.snapshots.push((t, pose, eq.config, eq.wrench));
        }
    }
    out
}

/// Simulates, renders and records one scripted interaction.
pub fn generate_primitive(
    kind: Primitive,
    env: &EnvironmentSpec,
    model: &GripperModel,
    settings: &GenerationSettings,
    rng: &Rng,
    duration: f64,
) -> Result<SequenceRecording> {
    let n_images = (duration * settings.image_rate).round() as usize;
    if n_images < 2 {
        return Err(Error::Config("duration * rate must be at least 2".into()));
    }
    let steps_per_image = (settings.wrench_rate / settings.image_rate).round().max(1.0) as usize;
    let n_steps = n_images * steps_per_image;
    let dt = 1.0 / settings.wrench_rate;
    let jitter = matches!(kind, Primitive::ManipulateObject | Primitive::ManipulateScene);

    let mut script_rng = rng.child("script");
    let mut segments = plan_segments(kind, model, duration, &mut script_rng);
    let mut jitter_rng = rng.child("jitter");
    let rollout = simulate(
        &mut segments,
        model,
        dt,
        n_steps,
        steps_per_image,
        jitter.then_some(&mut jitter_rng),
    );
    let (raw, wrench_times, snapshots) = (rollout.raw, rollout.times, rollout.snapshots);

    let measured = apply_sensor_model(&raw, &settings.noise, &mut rng.child("sensor"))?;
    let image_times: Vec<f64> = snapshots.iter().map(|s| s.0).collect();
    let pairs = synchronize(&image_times, settings.image_rate, &wrench_times);
    let reference = measured[pairs.first().ok_or(Error::Empty("synchronized frames"))?.1];

    let seq_id = format!("{}_{}_{:016x}", env.id, kind.as_str(), rng.seed());
    let mut effort_rng = rng.child("effort");
    let render_rng = rng.child("render");
    let scene = env.varied(&mut rng.child("appearance"));
    let mut frames = Vec::with_capacity(pairs.len());
    let mut images = Vec::with_capacity(pairs.len());
    for (i, w_idx) in pairs {
        let (t, pose, config, true_wrench) = &snapshots[i];
        let tared = measured[w_idx] - reference;
        let effort = settings.effort.simulate(true_wrench, &mut effort_rng);
        frames.push(Frame {
            timestamp: quantize(*t),
            image_path: format!("{seq_id}/img_{i:05}.png"),
            wrench: Wrench::from_array(tared.to_array().map(quantize)),
            effort: effort.map(quantize),
            pose: Pose {
                position: pose.position.map(quantize),
                yaw: quantize(pose.yaw),
            },
            env_id: env.id.clone(),
        });
        images.push(render(
            config,
            &settings.camera,
            &scene,
            &mut render_rng.child_index("frame", i as u64),
        ));
    }

    Ok(SequenceRecording {
        id: seq_id,
        primitive: kind,
        env_id: env.id.clone(),
        gripper: model.kind(),
        seed: rng.seed(),
        frames,
        images,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub gripper: GripperKind,
    pub environments: Vec<String>,
    pub primitives: Vec<Primitive>,
    /// Recorded seconds per (environment, primitive) pair.
    pub seconds_per_combination: f64,
    pub sequence_seconds: f64,
    pub seed: u64,
    pub settings: GenerationSettings,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            gripper: GripperKind::TendonActuated,
            environments: DEFAULT_ENVIRONMENTS.iter().map(|s| s.to_string()).collect(),
            primitives: Primitive::ALL.to_vec(),
            seconds_per_combination: 150.0,
            sequence_seconds: 15.0,
            seed: 0,
            settings: GenerationSettings::default(),
        }
    }
}

impl DatasetConfig {
    /// Roughly a tenth of the default size.
    pub fn quick() -> Self {
        Self {
            seconds_per_combination: 15.0,
            ..Self::default()
        }
    }

    pub fn sequences_per_combination(&self) -> usize {
        (self.seconds_per_combination / self.sequence_seconds).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.environments.is_empty() {
            return Err(Error::Config("no environments configured".into()));
        }
        let mut ids = self.environments.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != self.environments.len() {
            return Err(Error::Config("duplicate environment ids".into()));
        }
        if self.environments.iter().any(|e| e.is_empty() || e.contains([',', '/', ' '])) {
            return Err(Error::Config("environment ids must be non-empty without , / or spaces".into()));
        }
        if self.primitives.is_empty() {
            return Err(Error::Config("no primitives configured".into()));
        }
        if self.sequence_seconds * self.settings.image_rate < 2.0 {
            return Err(Error::Config("sequences need at least two frames".into()));
        }
        self.settings.camera.validate()
    }
}

/// Generates every (environment, primitive, repetition) sequence, writes
/// them under `root` and returns the manifest (also written to disk).
pub fn generate_dataset(cfg: &DatasetConfig, root: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(root)?;
    let model = GripperModel::preset(cfg.gripper);
    let reps = cfg.sequences_per_combination();
    let mut jobs = Vec::new();
    for env in &cfg.environments {
        for p in &cfg.primitives {
            for r in 0..reps {
                jobs.push((env.clone(), *p, r));
            }
        }
    }
    let descriptors: Vec<SequenceDescriptor> = jobs
        .par_iter()
        .map(|(env_id, p, r)| {
            let env = EnvironmentSpec::procedural(env_id);
            let seed = derive_seed(cfg.seed, &format!("seq/{env_id}/{p}/{r}"));
            let seq = generate_primitive(*p, &env, &model, &cfg.settings, &Rng::new(seed), cfg.sequence_seconds)?;
            save_sequence(root, &seq)?;
            Ok(seq.descriptor())
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        root: root.to_path_buf(),
        version: MANIFEST_VERSION,
        rate_hz: cfg.settings.image_rate,
        wrench_rate_hz: cfg.settings.wrench_rate,
        gripper: cfg.gripper,
        sequences: descriptors,
    };
    manifest.write()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hold_segment(kind: SegmentKind, target: f64, seed: u64) -> Segment {
        let model = GripperModel::tendon_actuated();
        let mut seg = SegmentBuilder::new(&model).build(kind, 10.0, true, &mut Rng::new(seed));
        if let Script::Contact(c) = &mut seg.script {
            c.target = target;
            c.target_wobble = 0.0;
        }
        seg
    }

    fn final_quarter_mean_force(seg: Segment) -> f64 {
        let model = GripperModel::tendon_actuated();
        let n = 1000;
        let out = simulate(&mut [seg], &model, 0.01, n, 10, None);
        let tail = &out.raw[3 * n / 4..];
        tail.iter().map(|w| w.force.norm()).sum::<f64>() / tail.len() as f64
    }

    #[test]
    fn push_holds_requested_force() {
        for seed in 0..20 {
            for kind in [SegmentKind::PushPlane, SegmentKind::PushCylinder, SegmentKind::PushPile] {
                let f = final_quarter_mean_force(hold_segment(kind, 3.0, seed));
                assert!((2.0..=4.0).contains(&f), "{kind:?} seed {seed}: {f}");
            }
        }
    }

    #[test]
    fn push_exceeds_free_space() {
        let mut free = hold_segment(SegmentKind::PushPlane, 3.0, 4);
        free.surface = SceneSurface::free_space();
        let pushed = final_quarter_mean_force(hold_segment(SegmentKind::PushPlane, 3.0, 4));
        let idle = final_quarter_mean_force(free);
        assert_eq!(idle, 0.0);
        assert!(pushed > idle);
    }

    #[test]
    fn frame_count_and_determinism() {
        let env = EnvironmentSpec::procedural("lab");
        let model = GripperModel::tendon_actuated();
        let settings = GenerationSettings::default();
        let a = generate_primitive(Primitive::Push, &env, &model, &settings, &Rng::new(5), 5.0).unwrap();
        assert_eq!(a.frames.len(), 50);
        assert_eq!(a.images.len(), 50);
        let b = generate_primitive(Primitive::Push, &env, &model, &settings, &Rng::new(5), 5.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frames[0].wrench, Wrench::ZERO);
        for w in a.frames.windows(2) {
            assert!((w[1].timestamp - w[0].timestamp - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn every_primitive_generates() {
        let env = EnvironmentSpec::procedural("office_a");
        for kind in [GripperKind::TendonActuated, GripperKind::Pneumatic] {
            let model = GripperModel::preset(kind);
            for p in Primitive::ALL {
                let seq = generate_primitive(p, &env, &model, &GenerationSettings::default(), &Rng::new(9), 8.0)
                    .unwrap();
                assert_eq!(seq.frames.len(), 80);
                assert!(seq.frames.iter().all(|f| f.wrench.is_finite()));
                let peak = seq.frames.iter().map(|f| f.wrench.force.norm()).fold(0.0, f64::max);
                assert!(peak > 0.5, "{kind} {p}: peak {peak}");
            }
        }
    }

    #[test]
    fn too_short_sequence_is_rejected() {
        let env = EnvironmentSpec::procedural("lab");
        let model = GripperModel::tendon_actuated();
        let r = generate_primitive(Primitive::Push, &env, &model, &GenerationSettings::default(), &Rng::new(0), 0.1);
        assert!(r.is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DatasetConfig::default().validate().is_ok());
        assert_eq!(DatasetConfig::default().sequences_per_combination(), 10);
        assert_eq!(DatasetConfig::quick().sequences_per_combination(), 1);
        let mut c = DatasetConfig::default();
        c.environments = vec!["lab".into(), "lab".into()];
        assert!(c.validate().is_err());
        c.environments = vec!["a,b".into()];
        assert!(c.validate().is_err());
        c.environments.clear();
        assert!(c.validate().is_err());
    }
}
