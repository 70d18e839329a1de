//! Dataset persistence: a manifest, one CSV per sequence and PNG frames.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{format_value, Frame, Primitive, SequenceRecording};
use crate::error::{Error, Result};
use crate::gripper::GripperKind;
use crate::image::{read_png_bytes, Image};
use crate::pose::Pose;
use crate::wrench::{Vec3, Wrench};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 18] = [
    "t", "fx", "fy", "fz", "tx", "ty", "tz", "e1", "e2", "e3", "e4", "e5", "e6", "px", "py", "pz",
    "yaw", "img_relpath",
];
const SEQUENCE_COLUMNS: &str = "seq_id,primitive,env_id,n_frames,seed";
const FRAMES_FILE: &str = "frames.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceDescriptor {
    pub seq_id: String,
    pub primitive: Primitive,
    pub env_id: String,
    pub n_frames: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub version: u32,
    /// Camera frame rate.
    pub rate_hz: f64,
    pub wrench_rate_hz: f64,
    pub gripper: GripperKind,
    pub sequences: Vec<SequenceDescriptor>,
}

impl Manifest {
    pub fn path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# visual force/torque dataset manifest");
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "rate_hz = {}", self.rate_hz);
        let _ = writeln!(s, "wrench_rate_hz = {}", self.wrench_rate_hz);
        let _ = writeln!(s, "gripper = {}", self.gripper);
        let _ = writeln!(s, "{SEQUENCE_COLUMNS}");
        for d in &self.sequences {
            let _ = writeln!(s, "{},{},{},{},{}", d.seq_id, d.primitive, d.env_id, d.n_frames, d.seed);
        }
        s
    }

    pub fn write(&self) -> Result<()> {
        fs::write(self.path(), self.to_text())?;
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        Self::parse(root, &path, &text)
    }

    fn parse(root: &Path, path: &Path, text: &str) -> Result<Self> {
        let mut version = None;
        let mut rate = None;
        let mut wrench_rate = None;
        let mut gripper = None;
        let mut sequences = Vec::new();
        let mut in_table = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::format(path, format!("line {}: {what}", n + 1));
            if !in_table {
                if line == SEQUENCE_COLUMNS {
                    in_table = true;
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
                let v = v.trim();
                match k.trim() {
                    "version" => version = Some(v.parse::<u32>().map_err(|_| bad("version"))?),
                    "rate_hz" => rate = Some(v.parse::<f64>().map_err(|_| bad("rate_hz"))?),
                    "wrench_rate_hz" => wrench_rate = Some(v.parse::<f64>().map_err(|_| bad("wrench_rate_hz"))?),
                    "gripper" => gripper = Some(v.parse::<GripperKind>()?),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            sequences.push(SequenceDescriptor {
                seq_id: cols[0].to_string(),
                primitive: cols[1].parse()?,
                env_id: cols[2].to_string(),
                n_frames: cols[3].parse().map_err(|_| bad("n_frames"))?,
                seed: cols[4].parse().map_err(|_| bad("seed"))?,
            });
        }
        let version = version.ok_or_else(|| Error::format(path, "missing version"))?;
        if version != MANIFEST_VERSION {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        Ok(Self {
            root: root.to_path_buf(),
            version,
            rate_hz: rate.ok_or_else(|| Error::format(path, "missing rate_hz"))?,
            wrench_rate_hz: wrench_rate.unwrap_or(rate.unwrap_or(0.0)),
            gripper: gripper.ok_or_else(|| Error::format(path, "missing gripper"))?,
            sequences,
        })
    }

    pub fn environments(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sequences.iter().map(|s| s.env_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(|s| s.n_frames).sum()
    }

    /// Checks that every sequence file exists and frame counts match.
    pub fn verify(&self) -> Result<()> {
        for d in &self.sequences {
            let seq = load_sequence(&self.root, d, self.gripper, false)?;
            if seq.frames.len() != d.n_frames {
                return Err(Error::format(
                    self.root.join(&d.seq_id),
                    format!("{} frames, manifest says {}", seq.frames.len(), d.n_frames),
                ));
            }
            for f in &seq.frames {
                if !self.root.join(&f.image_path).is_file() {
                    return Err(Error::format(self.root.join(&f.image_path), "missing image"));
                }
            }
        }
        Ok(())
    }
}

/// Partitions a manifest into (train, test) with one environment held out.
pub fn split_by_environment(manifest: &Manifest, holdout_env: &str) -> Result<(Manifest, Manifest)> {
    let (test, train): (Vec<_>, Vec<_>) = manifest
        .sequences
        .iter()
        .cloned()
        .partition(|s| s.env_id == holdout_env);
    if test.is_empty() {
        return Err(Error::UnknownEnvironment(holdout_env.to_string()));
    }
    let with = |sequences| Manifest {
        sequences,
        ..manifest.clone()
    };
    Ok((with(train), with(test)))
}

pub fn save_sequence(root: &Path, seq: &SequenceRecording) -> Result<()> {
    let dir = root.join(&seq.id);
    fs::create_dir_all(&dir)?;
    let mut w = csv::Writer::from_path(dir.join(FRAMES_FILE))?;
    w.write_record(CSV_HEADER)?;
    for f in &seq.frames {
        let mut rec: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        rec.push(format_value(f.timestamp));
        rec.extend(f.wrench.to_array().iter().map(|v| format_value(*v)));
        rec.extend(f.effort.iter().map(|v| format_value(*v)));
        rec.extend(f.pose.position.iter().map(|v| format_value(*v)));
        rec.push(format_value(f.pose.yaw));
        rec.push(f.image_path.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    for (f, img) in seq.frames.iter().zip(&seq.images) {
        img.save_png(&root.join(&f.image_path))?;
    }
    Ok(())
}

fn read_frames(root: &Path, desc: &SequenceDescriptor) -> Result<Vec<Frame>> {
    let path = root.join(&desc.seq_id).join(FRAMES_FILE);
    let mut r = csv::Reader::from_path(&path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::format(&path, "unexpected column layout"));
    }
    let mut frames = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::format(&path, format!("bad number `{}`", &rec[i])))
        };
        let mut w = [0.0; 6];
        let mut e = [0.0; 6];
        for i in 0..6 {
            w[i] = num(1 + i)?;
            e[i] = num(7 + i)?;
        }
        frames.push(Frame {
            timestamp: num(0)?,
            wrench: Wrench::from_array(w),
            effort: e,
            pose: Pose {
                position: Vec3::new(num(13)?, num(14)?, num(15)?),
                yaw: num(16)?,
            },
            image_path: rec[17].to_string(),
            env_id: desc.env_id.clone(),
        });
    }
    Ok(frames)
}

/// Loads a sequence; images are decoded only when `with_images` is set.
pub fn load_sequence(
    root: &Path,
    desc: &SequenceDescriptor,
    gripper: GripperKind,
    with_images: bool,
) -> Result<SequenceRecording> {
    let frames = read_frames(root, desc)?;
    let images = if with_images {
        frames
            .iter()
            .map(|f| Image::load_png(&root.join(&f.image_path)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(SequenceRecording {
        id: desc.seq_id.clone(),
        primitive: desc.primitive,
        env_id: desc.env_id.clone(),
        gripper,
        seed: desc.seed,
        frames,
        images,
    })
}

/// Flattened training/evaluation sample with the image kept as 8-bit RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Vec<u8>,
    pub resolution: usize,
    pub wrench: Wrench,
    pub effort: [f64; 6],
    pub timestamp: f64,
    pub sequence: usize,
}

impl Sample {
    pub fn to_image(&self) -> Image {
        Image::from_bytes(self.resolution, self.resolution, &self.image).expect("sample image size")
    }
}

/// All frames of a manifest in manifest order. Images are decoded when
/// `with_images` is set; otherwise `image` is empty.
pub fn load_samples(manifest: &Manifest, with_images: bool) -> Result<Vec<Sample>> {
    let per_seq: Vec<Vec<Sample>> = manifest
        .sequences
        .par_iter()
        .enumerate()
        .map(|(si, d)| {
            let frames = read_frames(&manifest.root, d)?;
            frames
                .into_iter()
                .map(|f| {
                    let (image, resolution) = if with_images {
                        let (w, h, bytes) = read_png_bytes(&manifest.root.join(&f.image_path))?;
                        if w != h {
                            return Err(Error::format(&f.image_path, "image is not square"));
                        }
                        (bytes, w)
                    } else {
                        (Vec::new(), 0)
                    };
                    Ok(Sample {
                        image,
                        resolution,
                        wrench: f.wrench,
                        effort: f.effort,
                        timestamp: f.timestamp,
                        sequence: si,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_seq.into_iter().flatten().collect())
}
