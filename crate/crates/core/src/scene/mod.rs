//! Declarative scenes: static primitives, persons on trajectories, a
//! sensor mount, and the analytic raycaster / virtual depth camera that
//! turn a scene snapshot into range data.
//!
//! A scene at a fixed time is an immutable [`SceneSnapshot`]; raycasting
//! and depth rendering over snapshots are pure and parallel over pixels.

mod raycast;
pub mod script;

pub use raycast::Shape;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{camera_to_lidar, Box3D, CameraIntrinsics, Mat3, RigidTransform, Vec3};
use crate::scanpattern::ScanConfig;
use crate::{Error, Result};

/// Default maximum sensing range in meters; hits beyond it are dropped.
pub const DEFAULT_MAX_RANGE: f64 = 75.0;

/// A static scene object: analytic shape plus identity and reflectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrimitive {
    pub shape: Shape,
    pub object_id: u32,
    /// Unitless in (0, 1]; becomes the intensity of points on this object.
    pub reflectivity: f64,
}

impl ScenePrimitive {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.reflectivity > 0.0 && self.reflectivity <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "reflectivity must be in (0, 1], got {}",
                self.reflectivity
            )));
        }
        Ok(())
    }
}

/// Primitive humanoid: a vertical cylinder from the feet to shoulder
/// height (85% of total height) plus a sphere head whose top touches the
/// total height. Rotationally symmetric, so only position and heading
/// matter for its silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonModel {
    pub height: f64,
    pub body_radius: f64,
    pub object_id: u32,
    pub reflectivity: f64,
}

impl PersonModel {
    pub const CLASS: &'static str = "person";

    pub fn validate(&self) -> Result<()> {
        if !(1.2..=2.2).contains(&self.height) {
            return Err(Error::InvalidConfig(format!(
                "person height must be in [1.2, 2.2] m, got {}",
                self.height
            )));
        }
        if !(0.1..=0.5).contains(&self.body_radius) {
            return Err(Error::InvalidConfig(format!(
                "person body radius must be in [0.1, 0.5] m, got {}",
                self.body_radius
            )));
        }
        if !(self.reflectivity > 0.0 && self.reflectivity <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "person reflectivity must be in (0, 1], got {}",
                self.reflectivity
            )));
        }
        Ok(())
    }

    /// The two body primitives at a given ground position.
    pub fn primitives_at(&self, position: Vec3) -> [ScenePrimitive; 2] {
        let head_radius = 0.5 * self.body_radius;
        [
            ScenePrimitive {
                shape: Shape::Cylinder {
                    base: position,
                    radius: self.body_radius,
                    height: 0.85 * self.height,
                },
                object_id: self.object_id,
                reflectivity: self.reflectivity,
            },
            ScenePrimitive {
                shape: Shape::Sphere {
                    center: Vec3::new(
                        position.x,
                        position.y,
                        position.z + self.height - head_radius,
                    ),
                    radius: head_radius,
                },
                object_id: self.object_id,
                reflectivity: self.reflectivity,
            },
        ]
    }
}

/// Tight world-frame box around a person at the given pose:
/// square footprint of side `2 * body_radius`, full height, yawed to the
/// walking heading.
pub fn person_world_box(model: &PersonModel, position: Vec3, heading: f64) -> Box3D {
    Box3D::new(
        Vec3::new(position.x, position.y, position.z + model.height / 2.0),
        2.0 * model.body_radius,
        2.0 * model.body_radius,
        model.height,
        heading,
    )
}

/// Piecewise-linear ground-plane path walked at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// (x, y) waypoints in meters on the z = 0 ground plane.
    pub waypoints: Vec<(f64, f64)>,
    /// Meters per second, > 0.
    pub speed: f64,
    /// Seconds; the person does not exist before this time.
    pub start_time: f64,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::InvalidConfig(
                "trajectory needs at least 2 waypoints".into(),
            ));
        }
        if !(self.speed > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "trajectory speed must be positive, got {}",
                self.speed
            )));
        }
        for pair in self.waypoints.windows(2) {
            let dx = pair[1].0 - pair[0].0;
            let dy = pair[1].1 - pair[0].1;
            if dx == 0.0 && dy == 0.0 {
                return Err(Error::InvalidConfig(
                    "consecutive trajectory waypoints must not coincide".into(),
                ));
            }
        }
        Ok(())
    }

    /// Position and heading at time `t >= start_time`. Past the final
    /// waypoint the person stands there with the last segment's heading.
    pub fn pose_at(&self, t: f64) -> Result<(Vec3, f64)> {
        if t < self.start_time {
            return Err(Error::InvalidInput(format!(
                "trajectory queried at t={t} before start_time={}",
                self.start_time
            )));
        }
        let mut remaining = self.speed * (t - self.start_time);
        for pair in self.waypoints.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            let (dx, dy) = (x1 - x0, y1 - y0);
            let len = (dx * dx + dy * dy).sqrt();
            let heading = dy.atan2(dx);
            if remaining <= len {
                let f = remaining / len;
                return Ok((Vec3::new(x0 + f * dx, y0 + f * dy, 0.0), heading));
            }
            remaining -= len;
        }
        let (xl, yl) = *self.waypoints.last().unwrap();
        let (x0, y0) = self.waypoints[self.waypoints.len() - 2];
        Ok((Vec3::new(xl, yl, 0.0), (yl - y0).atan2(xl - x0)))
    }
}

/// Static sensor mount: position in the world, downward tilt, and the yaw
/// of the level forward direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    pub position: Vec3,
    /// Downward pitch in radians, `0 <= tilt < pi/2`.
    pub tilt: f64,
    /// Yaw of the level forward direction, radians.
    pub heading: f64,
}

impl SensorMount {
    pub fn height(&self) -> f64 {
        self.position.z
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position.z > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mount height must be positive, got {}",
                self.position.z
            )));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.tilt) {
            return Err(Error::InvalidConfig(format!(
                "mount tilt must be in [0, pi/2), got {}",
                self.tilt
            )));
        }
        Ok(())
    }

    /// Sensor-to-world transform in the LiDAR convention: yaw about +z by
    /// `heading`, then the forward axis pitched downward by `tilt`.
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::new(
            Mat3::rotation_z(self.heading).mul_mat(&Mat3::rotation_y(self.tilt)),
            self.position,
        )
    }
}

/// A person entry of a scene: body model plus its trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonInstance {
    pub model: PersonModel,
    pub trajectory: Trajectory,
}

/// Full declarative scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneScript {
    pub statics: Vec<ScenePrimitive>,
    pub persons: Vec<PersonInstance>,
    pub mount: SensorMount,
    pub scan: ScanConfig,
    /// Strictly increasing frame timestamps in seconds.
    pub frame_times: Vec<f64>,
    pub seed: u64,
}

impl SceneScript {
    pub fn validate(&self) -> Result<()> {
        self.mount.validate()?;
        self.scan.validate()?;
        let mut ids = std::collections::HashSet::new();
        for p in &self.statics {
            p.validate()?;
            if !ids.insert(p.object_id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate object_id {} in scene",
                    p.object_id
                )));
            }
        }
        for p in &self.persons {
            p.model.validate()?;
            p.trajectory.validate()?;
            if !ids.insert(p.model.object_id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate object_id {} in scene",
                    p.model.object_id
                )));
            }
        }
        for pair in self.frame_times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidConfig(
                    "frame_times must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Materializes the scene at time `t`. Persons whose trajectories have
    /// not started yet are not spawned.
    pub fn snapshot_at(&self, t: f64) -> Result<SceneSnapshot> {
        let mut primitives = self.statics.clone();
        let mut persons = Vec::new();
        for p in &self.persons {
            if t < p.trajectory.start_time {
                continue;
            }
            let (position, heading) = p.trajectory.pose_at(t)?;
            primitives.extend(p.model.primitives_at(position));
            persons.push(PersonPose {
                object_id: p.model.object_id,
                world_box: person_world_box(&p.model, position, heading),
                heading,
            });
        }
        Ok(SceneSnapshot {
            primitives,
            persons,
        })
    }

    /// Advisory checks that do not fail validation: flags frames whose
    /// in-view person count falls outside the recommended 3..=10 band.
    /// "In view" tests the person's box center against the scan FoV and
    /// the default range limit, which is all the recommendation needs.
    pub fn warnings(&self) -> Vec<String> {
        let sensor_from_world = self.mount.to_transform().inverse();
        let mut low = 0usize;
        let mut high = 0usize;
        for &t in &self.frame_times {
            let Ok(snap) = self.snapshot_at(t) else {
                continue;
            };
            let in_view = snap
                .persons
                .iter()
                .filter(|p| {
                    let c = sensor_from_world.apply(p.world_box.center);
                    if c.x <= 0.0 || c.norm() > DEFAULT_MAX_RANGE {
                        return false;
                    }
                    let az = (c.y / c.x).atan();
                    let el = (c.z / c.x).atan();
                    az.abs() <= self.scan.fov_h / 2.0 && el.abs() <= self.scan.fov_v / 2.0
                })
                .count();
            if in_view < 3 {
                low += 1;
            } else if in_view > 10 {
                high += 1;
            }
        }
        let mut out = Vec::new();
        if low > 0 {
            out.push(format!(
                "{low} of {} frames have fewer than 3 persons in view",
                self.frame_times.len()
            ));
        }
        if high > 0 {
            out.push(format!(
                "{high} of {} frames have more than 10 persons in view",
                self.frame_times.len()
            ));
        }
        out
    }
}

/// A person's resolved pose within a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonPose {
    pub object_id: u32,
    pub world_box: Box3D,
    pub heading: f64,
}

/// Immutable scene state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSnapshot {
    pub primitives: Vec<ScenePrimitive>,
    pub persons: Vec<PersonPose>,
}

/// A raycast hit: Euclidean distance plus the object hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub object_id: u32,
    pub reflectivity: f64,
}

impl SceneSnapshot {
    /// Nearest intersection along a unit direction within `max_range`.
    pub fn raycast(&self, origin: Vec3, direction: Vec3, max_range: f64) -> Result<Option<Hit>> {
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "raycast direction must be unit length, |d| = {}",
                direction.norm()
            )));
        }
        Ok(self.raycast_unchecked(origin, direction, max_range))
    }

    /// Raycast without the unit-direction check, for the inner sampling
    /// loops that construct normalized directions themselves.
    pub(crate) fn raycast_unchecked(
        &self,
        origin: Vec3,
        direction: Vec3,
        max_range: f64,
    ) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for p in &self.primitives {
            if let Some(t) = p.shape.intersect(origin, direction) {
                if t <= max_range && best.is_none_or(|b| t < b.distance) {
                    best = Some(Hit {
                        distance: t,
                        object_id: p.object_id,
                        reflectivity: p.reflectivity,
                    });
                }
            }
        }
        best
    }

    /// Renders a z-depth image through `k` from the camera co-located with
    /// the sensor pose (LiDAR convention; the camera axes are the fixed
    /// permutation of the sensor axes). Pixels with no hit within
    /// `max_range` hold `+inf`.
    pub fn render_depth(
        &self,
        sensor_to_world: &RigidTransform,
        k: &CameraIntrinsics,
        max_range: f64,
    ) -> Result<DepthImage> {
        k.validate()?;
        let width = k.width as usize;
        let height = k.height as usize;
        let mut data = vec![f64::INFINITY; width * height];
        data.par_chunks_mut(width).enumerate().for_each(|(v, row)| {
            for (u, px) in row.iter_mut().enumerate() {
                let dir_cam = Vec3::new(
                    (u as f64 - k.cx) / k.fx,
                    (v as f64 - k.cy) / k.fy,
                    1.0,
                );
                let scale = dir_cam.norm();
                let dir_world = sensor_to_world
                    .rotation
                    .mul_vec(camera_to_lidar(dir_cam) * (1.0 / scale));
                if let Some(hit) =
                    self.raycast_unchecked(sensor_to_world.translation, dir_world, max_range)
                {
                    // Euclidean range back to z-depth along the optical axis.
                    *px = hit.distance / scale;
                }
            }
        });
        Ok(DepthImage {
            width: k.width,
            height: k.height,
            data,
        })
    }
}

/// Row-major z-depth image; `+inf` marks pixels with no return. Values are
/// f64 in memory; the file format and the point-sampling pipeline quantize
/// to f32 so in-process and file-roundtripped paths agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl DepthImage {
    #[inline]
    pub fn at(&self, u: u32, v: u32) -> f64 {
        self.data[v as usize * self.width as usize + u as usize]
    }
}
