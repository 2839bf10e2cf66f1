//! Dataset lifecycle: manifests, tilt/height normalization, real/synthetic
//! mixing, seeded splits, augmentation, and summary statistics.
//!
//! Every seeded operation uses ChaCha8 keyed with `seed_from_u64` and
//! in-place Fisher-Yates shuffles, so identical seeds give bit-identical
//! results across runs and platforms.

mod io;

pub use io::{read_frame, read_labels, write_frame};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Mat3, Vec3};
use crate::scene::SensorMount;
use crate::sensor::{FrameConvention, Label, PointCloudFrame};
use crate::{Error, Result};

/// Default half-range for randomized rotation augmentation.
pub const DEFAULT_MAX_ROTATION: f64 = std::f64::consts::FRAC_PI_4;
/// Default range for randomized scale augmentation.
pub const DEFAULT_SCALE_RANGE: (f64, f64) = (0.95, 1.05);

/// Derives a per-stream seed from a base seed (splitmix64 over the pair),
/// so per-frame randomness is independent of worker scheduling.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Origin of a dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Synthetic,
}

/// One frame of a dataset: its two files, origin, and id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame: PathBuf,
    pub labels: PathBuf,
    pub source: Source,
    pub frame_id: u64,
}

/// Ordered collection of frames plus free-form metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Loads a manifest; entry paths are resolved relative to the manifest
    /// file's directory and must exist.
    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut seen = std::collections::HashSet::new();
        for entry in &mut manifest.entries {
            if entry.frame.is_relative() {
                entry.frame = base.join(&entry.frame);
            }
            if entry.labels.is_relative() {
                entry.labels = base.join(&entry.labels);
            }
            for file in [&entry.frame, &entry.labels] {
                if !file.exists() {
                    return Err(Error::InvalidInput(format!(
                        "manifest {} references missing file {}",
                        path.display(),
                        file.display()
                    )));
                }
            }
            if !seen.insert(entry.frame_id) {
                return Err(Error::InvalidInput(format!(
                    "manifest {} has duplicate frame_id {}",
                    path.display(),
                    entry.frame_id
                )));
            }
        }
        Ok(manifest)
    }

    /// Writes the manifest, storing entry paths relative to the manifest's
    /// directory where possible (absolute otherwise).
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut on_disk = self.clone();
        for entry in &mut on_disk.entries {
            if let Ok(rel) = entry.frame.strip_prefix(base) {
                entry.frame = rel.to_path_buf();
            }
            if let Ok(rel) = entry.labels.strip_prefix(base) {
                entry.labels = rel.to_path_buf();
            }
        }
        let text = serde_json::to_string_pretty(&on_disk).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The frame convention recorded in the metadata; raw when absent.
    pub fn convention(&self) -> FrameConvention {
        match self.metadata.get("convention").and_then(|v| v.as_str()) {
            Some("normalized") => FrameConvention::Normalized,
            _ => FrameConvention::SensorRaw,
        }
    }

    pub fn set_convention(&mut self, convention: FrameConvention) {
        let tag = match convention {
            FrameConvention::SensorRaw => "sensor-raw",
            FrameConvention::Normalized => "normalized",
        };
        self.metadata
            .insert("convention".into(), serde_json::Value::String(tag.into()));
    }
}

/// Round-half-up; the rounding rule for mix and split counts.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Requested real/synthetic composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSpec {
    /// Fraction of the output drawn from the synthetic pool, in [0, 1].
    pub synthetic_fraction: f64,
    pub total_count: usize,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.synthetic_fraction) {
            return Err(Error::InvalidConfig(format!(
                "synthetic_fraction must be in [0, 1], got {}",
                self.synthetic_fraction
            )));
        }
        Ok(())
    }

    /// Exact per-source counts: synthetic gets round-half-up of its share,
    /// the remainder goes to real.
    pub fn counts(&self) -> (usize, usize) {
        let synthetic = round_half_up(self.synthetic_fraction * self.total_count as f64);
        (synthetic, self.total_count - synthetic)
    }
}

/// Samples `spec.total_count` frames without replacement — the synthetic
/// share from `synthetic`, the rest from `real` — and interleaves them in
/// seeded-shuffled order. Source tags are preserved; entries are
/// renumbered 0..total in output order, since the two pools' frame ids
/// usually overlap.
pub fn mix(
    real: &DatasetManifest,
    synthetic: &DatasetManifest,
    spec: &MixSpec,
    seed: u64,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let (want_synthetic, want_real) = spec.counts();
    if synthetic.len() < want_synthetic {
        return Err(Error::InvalidInput(format!(
            "synthetic pool has {} frames, {} requested (short by {})",
            synthetic.len(),
            want_synthetic,
            want_synthetic - synthetic.len()
        )));
    }
    if real.len() < want_real {
        return Err(Error::InvalidInput(format!(
            "real pool has {} frames, {} requested (short by {})",
            real.len(),
            want_real,
            want_real - real.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut from_synthetic = synthetic.entries.clone();
    from_synthetic.shuffle(&mut rng);
    from_synthetic.truncate(want_synthetic);
    let mut from_real = real.entries.clone();
    from_real.shuffle(&mut rng);
    from_real.truncate(want_real);

    let mut entries = from_synthetic;
    entries.extend(from_real);
    entries.shuffle(&mut rng);
    for (i, entry) in entries.iter_mut().enumerate() {
        entry.frame_id = i as u64;
    }

    let mut metadata = BTreeMap::new();
    metadata.insert(
        "mix".into(),
        serde_json::json!({
            "synthetic_fraction": spec.synthetic_fraction,
            "total_count": spec.total_count,
            "synthetic": want_synthetic,
            "real": want_real,
        }),
    );
    Ok(DatasetManifest {
        seed,
        metadata,
        entries,
    })
}

/// Seeded shuffle, then the first `round(train_fraction * N)` entries form
/// the training set and the rest the validation set. Disjoint, exhaustive,
/// deterministic under the seed.
pub fn split(
    ds: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut entries = ds.entries.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);
    let n_train = round_half_up(train_fraction * entries.len() as f64);
    let validation_entries = entries.split_off(n_train);

    let make = |entries: Vec<ManifestEntry>, role: &str| {
        let mut metadata = ds.metadata.clone();
        metadata.insert(
            "split".into(),
            serde_json::json!({ "role": role, "train_fraction": train_fraction }),
        );
        DatasetManifest {
            seed,
            metadata,
            entries,
        }
    };
    Ok((
        make(entries, "train"),
        make(validation_entries, "validation"),
    ))
}

/// Levels a sensor-raw frame: rotates by the mount tilt about the sensor
/// origin, then shifts up by the mount height. The output origin is the
/// ground point beneath the sensor, x level forward, z up; flat ground
/// lands at `z = 0`. Box centers map rigidly; yaw and extents are
/// unchanged (leveling does not alter yaw about the vertical).
pub fn normalize(
    frame: &PointCloudFrame,
    labels: &[Label],
    mount: &SensorMount,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    if frame.convention != FrameConvention::SensorRaw {
        return Err(Error::InvalidInput(
            "frame is already normalized".into(),
        ));
    }
    let rot = Mat3::rotation_y(mount.tilt);
    let lift = Vec3::new(0.0, 0.0, mount.height());
    let mut out = frame.clone();
    for p in &mut out.points {
        let v = rot.mul_vec(Vec3::new(p.x, p.y, p.z)) + lift;
        (p.x, p.y, p.z) = (v.x, v.y, v.z);
    }
    out.convention = FrameConvention::Normalized;
    let labels = labels
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.box3.center = rot.mul_vec(l.box3.center) + lift;
            l
        })
        .collect();
    Ok((out, labels))
}

/// Exact inverse of [`normalize`].
pub fn denormalize(
    frame: &PointCloudFrame,
    labels: &[Label],
    mount: &SensorMount,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    if frame.convention != FrameConvention::Normalized {
        return Err(Error::InvalidInput(
            "frame is not normalized".into(),
        ));
    }
    let rot = Mat3::rotation_y(-mount.tilt);
    let lift = Vec3::new(0.0, 0.0, mount.height());
    let mut out = frame.clone();
    for p in &mut out.points {
        let v = rot.mul_vec(Vec3::new(p.x, p.y, p.z) - lift);
        (p.x, p.y, p.z) = (v.x, v.y, v.z);
    }
    out.convention = FrameConvention::SensorRaw;
    let labels = labels
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.box3.center = rot.mul_vec(l.box3.center - lift);
            l
        })
        .collect();
    Ok((out, labels))
}

/// Which coordinate a mirror augmentation negates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorAxis {
    X,
    Y,
}

/// A concrete augmentation applied to a normalized frame and its labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    /// Rotate points and boxes about +z; box yaw shifts by the angle.
    Rotate { angle: f64 },
    /// Scale all coordinates, box centers, and box extents.
    Scale { factor: f64 },
    /// Negate one coordinate; yaw maps to -yaw (y) or pi - yaw (x).
    Mirror { axis: MirrorAxis },
}

impl Augmentation {
    pub fn sample_rotate(max_angle: f64, rng: &mut impl Rng) -> Augmentation {
        Augmentation::Rotate {
            angle: rng.gen_range(-max_angle..=max_angle),
        }
    }

    pub fn sample_scale(range: (f64, f64), rng: &mut impl Rng) -> Augmentation {
        Augmentation::Scale {
            factor: rng.gen_range(range.0..=range.1),
        }
    }
}

/// Applies one augmentation. The frame must be normalized (the ops assume
/// a level frame); `num_points` on labels is unchanged, and point-in-box
/// membership is preserved (bit-exactly for mirror, to rounding for
/// rotate, within scale rounding for scale).
pub fn augment(
    frame: &PointCloudFrame,
    labels: &[Label],
    aug: &Augmentation,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    if frame.convention != FrameConvention::Normalized {
        return Err(Error::InvalidInput(
            "augmentation requires a normalized frame".into(),
        ));
    }
    let mut out = frame.clone();
    let mut out_labels: Vec<Label> = labels.to_vec();
    match *aug {
        Augmentation::Rotate { angle } => {
            if !angle.is_finite() {
                return Err(Error::InvalidInput("rotation angle must be finite".into()));
            }
            let (s, c) = angle.sin_cos();
            for p in &mut out.points {
                let (x, y) = (p.x, p.y);
                p.x = c * x - s * y;
                p.y = s * x + c * y;
            }
            for l in &mut out_labels {
                let (x, y) = (l.box3.center.x, l.box3.center.y);
                l.box3.center.x = c * x - s * y;
                l.box3.center.y = s * x + c * y;
                l.box3.yaw = wrap_angle(l.box3.yaw + angle);
            }
        }
        Augmentation::Scale { factor } => {
            if !(factor > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "scale factor must be positive, got {factor}"
                )));
            }
            for p in &mut out.points {
                p.x *= factor;
                p.y *= factor;
                p.z *= factor;
            }
            for l in &mut out_labels {
                l.box3.center = l.box3.center * factor;
                l.box3.dx *= factor;
                l.box3.dy *= factor;
                l.box3.dz *= factor;
            }
        }
        Augmentation::Mirror { axis } => {
            for p in &mut out.points {
                match axis {
                    MirrorAxis::X => p.x = -p.x,
                    MirrorAxis::Y => p.y = -p.y,
                }
            }
            for l in &mut out_labels {
                match axis {
                    MirrorAxis::X => {
                        l.box3.center.x = -l.box3.center.x;
                        l.box3.yaw = wrap_angle(std::f64::consts::PI - l.box3.yaw);
                    }
                    MirrorAxis::Y => {
                        l.box3.center.y = -l.box3.center.y;
                        l.box3.yaw = wrap_angle(-l.box3.yaw);
                    }
                }
            }
        }
    }
    Ok((out, out_labels))
}

/// Aggregate description of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub frames: usize,
    pub real_frames: usize,
    pub synthetic_frames: usize,
    pub total_points: u64,
    pub min_points_per_frame: usize,
    pub max_points_per_frame: usize,
    pub mean_points_per_frame: f64,
    pub total_labels: usize,
    /// Labels-per-frame histogram: count of frames keyed by label count.
    pub persons_per_frame: BTreeMap<usize, usize>,
    pub min_points_per_box: usize,
    pub max_points_per_box: usize,
    pub mean_points_per_box: f64,
}

/// Scans the dataset and aggregates counts. Point counts come from the
/// fixed 16-byte record size; labels are parsed.
pub fn stats(ds: &DatasetManifest) -> Result<DatasetStats> {
    let mut out = DatasetStats {
        frames: ds.len(),
        real_frames: 0,
        synthetic_frames: 0,
        total_points: 0,
        min_points_per_frame: 0,
        max_points_per_frame: 0,
        mean_points_per_frame: 0.0,
        total_labels: 0,
        persons_per_frame: BTreeMap::new(),
        min_points_per_box: 0,
        max_points_per_box: 0,
        mean_points_per_box: 0.0,
    };
    let mut first_frame = true;
    let mut first_box = true;
    let mut box_points_total: u64 = 0;
    for entry in &ds.entries {
        match entry.source {
            Source::Real => out.real_frames += 1,
            Source::Synthetic => out.synthetic_frames += 1,
        }
        let bytes = std::fs::metadata(&entry.frame)
            .map_err(|e| Error::io(&entry.frame, e))?
            .len();
        if bytes % 16 != 0 {
            return Err(Error::Malformed {
                path: entry.frame.clone(),
                message: format!("point file length {bytes} is not a multiple of 16"),
            });
        }
        let n = (bytes / 16) as usize;
        out.total_points += n as u64;
        if first_frame {
            out.min_points_per_frame = n;
            out.max_points_per_frame = n;
            first_frame = false;
        } else {
            out.min_points_per_frame = out.min_points_per_frame.min(n);
            out.max_points_per_frame = out.max_points_per_frame.max(n);
        }

        let labels = read_labels(&entry.labels)?;
        *out.persons_per_frame.entry(labels.len()).or_insert(0) += 1;
        out.total_labels += labels.len();
        for l in &labels {
            box_points_total += l.num_points as u64;
            if first_box {
                out.min_points_per_box = l.num_points;
                out.max_points_per_box = l.num_points;
                first_box = false;
            } else {
                out.min_points_per_box = out.min_points_per_box.min(l.num_points);
                out.max_points_per_box = out.max_points_per_box.max(l.num_points);
            }
        }
    }
    if out.frames > 0 {
        out.mean_points_per_frame = out.total_points as f64 / out.frames as f64;
    }
    if out.total_labels > 0 {
        out.mean_points_per_box = box_points_total as f64 / out.total_labels as f64;
    }
    Ok(out)
}
