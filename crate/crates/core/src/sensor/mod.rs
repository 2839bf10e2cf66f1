//! Turns a scene plus the scan pattern into annotated point-cloud frames.
//!
//! Two interchangeable generation paths are kept permanently:
//!
//! - **direct**: one exact raycast per scan direction. This is the
//!   reference path; point positions are exact up to f64 rounding.
//! - **depth**: render a virtual depth image once, map every scan
//!   direction to its nearest pixel, read the z-depth there and unproject.
//!   This mirrors pipelines built on virtual depth cameras and accepts
//!   externally rendered depth frames via [`ingest_external_depth`]. Its
//!   positions carry the pixel-quantization error bounded by
//!   `range * max per-pixel angular pitch`.
//!
//! Both paths emit points in the sensor-raw frame (LiDAR convention,
//! origin at the sensor head, x along the tilted boresight).

mod depth_file;

pub use depth_file::{read_depth_file, write_depth_file, DEPTH_MAGIC};

use serde::{Deserialize, Serialize};

use crate::geometry::{camera_to_lidar, wrap_angle, Box3D, CameraIntrinsics, RigidTransform, Vec3};
use crate::scanpattern::{directions_to_pixels, generate_scan_directions, ScanConfig};
use crate::scene::{DepthImage, SceneScript, SceneSnapshot, DEFAULT_MAX_RANGE};
use crate::{Error, Result};

/// Labels with fewer supporting points than this are dropped as occluded.
pub const DEFAULT_MIN_POINTS: usize = 5;

/// Coordinate convention of a frame's points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameConvention {
    /// Origin at the sensor head, x along the (possibly tilted) boresight.
    SensorRaw,
    /// Tilt and height removed: origin on the ground beneath the sensor,
    /// x level forward, z up.
    Normalized,
}

/// One measurement sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Unitless in [0, 1].
    pub intensity: f64,
}

/// A timestamped set of samples in a declared coordinate frame.
///
/// `provenance` and `sample_indices` are generation-time metadata carried
/// by synthetic frames only (parallel to `points`); neither survives the
/// on-disk point format.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudFrame {
    pub points: Vec<Point>,
    pub frame_id: u64,
    pub convention: FrameConvention,
    /// Per-point id of the object that produced the return.
    pub provenance: Option<Vec<u32>>,
    /// Per-point index into the generating scan-direction sequence.
    pub sample_indices: Option<Vec<usize>>,
}

impl PointCloudFrame {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidInput("non-finite point coordinate".into()));
            }
            if !(0.0..=1.0).contains(&p.intensity) {
                return Err(Error::InvalidInput(format!(
                    "intensity must be in [0, 1], got {}",
                    p.intensity
                )));
            }
        }
        if let Some(prov) = &self.provenance {
            if prov.len() != self.points.len() {
                return Err(Error::InvalidInput(
                    "provenance length does not match point count".into(),
                ));
            }
        }
        if let Some(idx) = &self.sample_indices {
            if idx.len() != self.points.len() {
                return Err(Error::InvalidInput(
                    "sample_indices length does not match point count".into(),
                ));
            }
        }
        Ok(())
    }
}

/// An annotated box in the same frame as its owning cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub box3: Box3D,
    pub class: String,
    pub object_id: u32,
    /// Cloud points inside the box (boundary inclusive).
    pub num_points: usize,
}

/// Knobs shared by both generation paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub max_range: f64,
    pub min_points: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_range: DEFAULT_MAX_RANGE,
            min_points: DEFAULT_MIN_POINTS,
        }
    }
}

/// Beam unit direction in the LiDAR frame for a scan direction. Uses the
/// tangent mapping so the direct and depth paths sample identical rays.
#[inline]
fn beam_direction(azimuth: f64, elevation: f64) -> Vec3 {
    Vec3::new(1.0, azimuth.tan(), elevation.tan())
        .normalized()
        .expect("beam direction is never zero")
}

/// Exact generation: one raycast per scan direction, hits mapped back into
/// the sensor frame, labels attached.
pub fn simulate_frame_direct(
    scene: &SceneScript,
    t: f64,
    frame_id: u64,
    opts: &SimOptions,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    scene.validate()?;
    let snapshot = scene.snapshot_at(t)?;
    let dirs = generate_scan_directions(&scene.scan)?;
    let sensor_to_world = scene.mount.to_transform();
    let world_to_sensor = sensor_to_world.inverse();

    let mut points = Vec::with_capacity(dirs.len());
    let mut provenance = Vec::with_capacity(dirs.len());
    let mut sample_indices = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let dir_world = sensor_to_world
            .rotation
            .mul_vec(beam_direction(d.azimuth, d.elevation));
        if let Some(hit) =
            snapshot.raycast_unchecked(sensor_to_world.translation, dir_world, opts.max_range)
        {
            let p_world = sensor_to_world.translation + dir_world * hit.distance;
            let p = world_to_sensor.apply(p_world);
            points.push(Point {
                x: p.x,
                y: p.y,
                z: p.z,
                intensity: hit.reflectivity,
            });
            provenance.push(hit.object_id);
            sample_indices.push(d.sample_index);
        }
    }

    let frame = PointCloudFrame {
        points,
        frame_id,
        convention: FrameConvention::SensorRaw,
        provenance: Some(provenance),
        sample_indices: Some(sample_indices),
    };
    let labels = annotate_snapshot(&snapshot, &scene.mount, &frame, opts.min_points);
    Ok((frame, labels))
}

/// Depth-image generation: render once, then sample the image along the
/// scan pattern. `resolution` sizes the virtual depth camera; intrinsics
/// come from the scan's horizontal FoV.
pub fn simulate_frame_depthpath(
    scene: &SceneScript,
    t: f64,
    frame_id: u64,
    resolution: (u32, u32),
    opts: &SimOptions,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    scene.validate()?;
    let k = depth_camera_intrinsics(&scene.scan, resolution)?;
    let snapshot = scene.snapshot_at(t)?;
    let sensor_to_world = scene.mount.to_transform();
    let img = snapshot.render_depth(&sensor_to_world, &k, opts.max_range)?;
    let frame = cloud_from_depth(&img, &k, &scene.scan, frame_id, None)?;
    let labels = annotate_snapshot(&snapshot, &scene.mount, &frame, opts.min_points);
    Ok((frame, labels))
}

/// Intrinsics for the virtual depth camera, rejecting resolutions whose
/// implied vertical FoV cannot cover the scan pattern.
pub fn depth_camera_intrinsics(scan: &ScanConfig, resolution: (u32, u32)) -> Result<CameraIntrinsics> {
    scan.validate()?;
    let (width, height) = resolution;
    let k = CameraIntrinsics::from_horizontal_fov(scan.fov_h, width, height)?;
    let needed = 2.0 * k.fy * (scan.fov_v / 2.0).tan();
    if needed > height as f64 {
        return Err(Error::InvalidConfig(format!(
            "resolution {width}x{height} cannot cover the vertical scan FoV: \
             needs at least {} rows",
            needed.ceil()
        )));
    }
    Ok(k)
}

/// Shared depth-sampling pipeline: scan directions to pixels, pixel depths
/// to sensor-frame points. Depths are quantized to f32 — the depth-file
/// precision — before unprojection, so the in-process depth path and a
/// file round trip produce bit-identical clouds. Depth images carry no
/// reflectivity, so intensities are a constant 1.0.
fn cloud_from_depth(
    img: &DepthImage,
    k: &CameraIntrinsics,
    scan: &ScanConfig,
    frame_id: u64,
    source: Option<&std::path::Path>,
) -> Result<PointCloudFrame> {
    let dirs = generate_scan_directions(scan)?;
    let pixels = directions_to_pixels(&dirs, k)?;
    let mut points = Vec::with_capacity(dirs.len());
    let mut sample_indices = Vec::with_capacity(dirs.len());
    for (d, &(u, v)) in dirs.iter().zip(&pixels) {
        let depth = img.at(u, v) as f32;
        if depth.is_infinite() {
            continue;
        }
        if !(depth > 0.0) || depth.is_nan() {
            return Err(Error::Malformed {
                path: source.map(|p| p.to_path_buf()).unwrap_or_default(),
                message: format!("non-positive depth {depth} at pixel ({u}, {v})"),
            });
        }
        let p = camera_to_lidar(k.unproject(u as f64, v as f64, depth as f64)?);
        points.push(Point {
            x: p.x,
            y: p.y,
            z: p.z,
            intensity: 1.0,
        });
        sample_indices.push(d.sample_index);
    }
    Ok(PointCloudFrame {
        points,
        frame_id,
        convention: FrameConvention::SensorRaw,
        provenance: None,
        sample_indices: Some(sample_indices),
    })
}

/// Builds labels for every spawned person: the world box corners are mapped
/// into the sensor frame, the yaw is recomputed in the sensor's
/// level-projected frame (person heading minus mount heading), and the
/// label box is the tightest box of that yaw enclosing the mapped corners
/// around the mapped center. Under a tilted mount the fitted extents grow
/// just enough to keep the tilted body inside a box the label format can
/// express. Labels supported by fewer than `min_points` cloud points are
/// dropped as fully occluded.
pub fn annotate_frame(
    scene: &SceneScript,
    t: f64,
    cloud: &PointCloudFrame,
    min_points: usize,
) -> Result<Vec<Label>> {
    if cloud.convention != FrameConvention::SensorRaw {
        return Err(Error::InvalidInput(
            "annotate_frame expects a sensor-raw frame".into(),
        ));
    }
    let snapshot = scene.snapshot_at(t)?;
    Ok(annotate_snapshot(&snapshot, &scene.mount, cloud, min_points))
}

fn annotate_snapshot(
    snapshot: &SceneSnapshot,
    mount: &crate::scene::SensorMount,
    cloud: &PointCloudFrame,
    min_points: usize,
) -> Vec<Label> {
    let world_to_sensor = mount.to_transform().inverse();
    let mut labels = Vec::new();
    for person in &snapshot.persons {
        let center = world_to_sensor.apply(person.world_box.center);
        let yaw = wrap_angle(person.heading - mount.heading);
        let (s, c) = yaw.sin_cos();
        let (mut hx, mut hy, mut hz) = (0.0f64, 0.0f64, 0.0f64);
        for corner in person.world_box.corners() {
            let d = world_to_sensor.apply(corner) - center;
            hx = hx.max((c * d.x + s * d.y).abs());
            hy = hy.max((-s * d.x + c * d.y).abs());
            hz = hz.max(d.z.abs());
        }
        let box3 = Box3D::new(center, 2.0 * hx, 2.0 * hy, 2.0 * hz, yaw);
        let num_points = cloud.points.iter().filter(|p| box3.contains(Vec3::new(p.x, p.y, p.z))).count();
        if num_points < min_points {
            continue;
        }
        labels.push(Label {
            box3,
            class: crate::scene::PersonModel::CLASS.to_string(),
            object_id: person.object_id,
            num_points,
        });
    }
    labels
}

/// Builds a frame from an externally rendered depth file using the same
/// sampling pipeline as the in-process depth path. The sensor pose is
/// validated and kept for the caller's bookkeeping; the produced points
/// are sensor-frame, exactly as [`simulate_frame_depthpath`] emits them.
/// No labels: external annotation must be supplied separately.
pub fn ingest_external_depth(
    path: &std::path::Path,
    pose: &RigidTransform,
    k: &CameraIntrinsics,
    scan: &ScanConfig,
    frame_id: u64,
) -> Result<PointCloudFrame> {
    pose.validate()?;
    k.validate()?;
    let img = read_depth_file(path)?;
    if img.width != k.width || img.height != k.height {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            message: format!(
                "depth file is {}x{} but the intrinsics expect {}x{}",
                img.width, img.height, k.width, k.height
            ),
        });
    }
    cloud_from_depth(&img, k, scan, frame_id, Some(path))
}

/// Displaces every point along its ray from the sensor origin by
/// `Normal(0, sigma)` meters. Deterministic under `seed`; `sigma = 0`
/// returns the input unchanged.
pub fn add_range_noise(cloud: &PointCloudFrame, sigma: f64, seed: u64) -> Result<PointCloudFrame> {
    if sigma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise sigma must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).expect("sigma checked above");
    let mut out = cloud.clone();
    for p in &mut out.points {
        let v = Vec3::new(p.x, p.y, p.z);
        let r = v.norm();
        if r == 0.0 {
            continue;
        }
        let displaced = v * (1.0 + normal.sample(&mut rng) / r);
        p.x = displaced.x;
        p.y = displaced.y;
        p.z = displaced.z;
    }
    Ok(out)
}
