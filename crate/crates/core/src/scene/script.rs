//! Scene-script files: one JSON document describing statics, persons,
//! mount, sensor, frame schedule, and seed.
//!
//! All angles in the file are degrees and all lengths meters; loading
//! converts to radians. Annotated example:
//!
//! ```json
//! {
//!   "seed": 42,
//!   "sensor": {
//!     "num_scanlines": 200, "points_per_line": 100,
//!     "fov_h_deg": 72.0, "fov_v_deg": 30.0, "frame_rate_hz": 10.0
//!   },
//!   "mount": { "position": [0.0, 0.0, 4.0], "tilt_deg": 16.0, "heading_deg": 0.0 },
//!   "statics": [
//!     { "shape": "ground_plane", "z": 0.0, "object_id": 0, "reflectivity": 0.35 },
//!     { "shape": "box", "center": [14.0, -6.0, 1.25], "extents": [2.5, 1.2, 2.5],
//!       "yaw_deg": 10.0, "object_id": 1, "reflectivity": 0.6 },
//!     { "shape": "cylinder", "base": [10.0, 5.0, 0.0], "radius": 0.3,
//!       "height": 4.0, "object_id": 2, "reflectivity": 0.5 },
//!     { "shape": "sphere", "center": [18.0, 2.0, 0.8], "radius": 0.8,
//!       "object_id": 3, "reflectivity": 0.7 }
//!   ],
//!   "persons": [
//!     { "object_id": 10, "height": 1.78, "body_radius": 0.28,
//!       "trajectory": { "waypoints": [[18.0, -6.0], [12.0, 6.0]],
//!                       "speed": 1.3, "start_time": 0.0 } }
//!   ],
//!   "frame_times": { "start": 0.0, "count": 100, "dt": 0.1 }
//! }
//! ```
//!
//! `frame_times` may also be a plain array of seconds. Persons walk on the
//! `z = 0` ground plane; `reflectivity` on a person defaults to 0.45.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Box3D, Vec3};
use crate::scanpattern::ScanConfig;
use crate::{Error, Result};

use super::{PersonInstance, PersonModel, ScenePrimitive, SceneScript, SensorMount, Shape, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    sensor: SensorFile,
    mount: MountFile,
    #[serde(default)]
    statics: Vec<ShapeFile>,
    #[serde(default)]
    persons: Vec<PersonFile>,
    frame_times: FrameTimesFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct SensorFile {
    num_scanlines: u32,
    points_per_line: u32,
    fov_h_deg: f64,
    fov_v_deg: f64,
    frame_rate_hz: f64,
}

impl Default for SensorFile {
    fn default() -> Self {
        let cfg = ScanConfig::default();
        SensorFile {
            num_scanlines: cfg.num_scanlines,
            points_per_line: cfg.points_per_line,
            fov_h_deg: cfg.fov_h.to_degrees(),
            fov_v_deg: cfg.fov_v.to_degrees(),
            frame_rate_hz: cfg.frame_rate,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MountFile {
    position: [f64; 3],
    tilt_deg: f64,
    #[serde(default)]
    heading_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
enum ShapeFile {
    GroundPlane {
        z: f64,
        object_id: u32,
        reflectivity: f64,
    },
    Box {
        center: [f64; 3],
        extents: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
        object_id: u32,
        reflectivity: f64,
    },
    Cylinder {
        base: [f64; 3],
        radius: f64,
        height: f64,
        object_id: u32,
        reflectivity: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        object_id: u32,
        reflectivity: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct PersonFile {
    object_id: u32,
    height: f64,
    body_radius: f64,
    #[serde(default = "default_person_reflectivity")]
    reflectivity: f64,
    trajectory: TrajectoryFile,
}

fn default_person_reflectivity() -> f64 {
    0.45
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryFile {
    waypoints: Vec<[f64; 2]>,
    speed: f64,
    #[serde(default)]
    start_time: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FrameTimesFile {
    List(Vec<f64>),
    Schedule { start: f64, count: usize, dt: f64 },
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl SceneScript {
    /// Loads and validates a scene script from a JSON file.
    pub fn load(path: &Path) -> Result<SceneScript> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScriptFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        SceneScript::from_file(file)
    }

    /// Parses a scene script from JSON text (used by tests and tools).
    pub fn from_json(text: &str) -> Result<SceneScript> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        SceneScript::from_file(file)
    }

    fn from_file(file: ScriptFile) -> Result<SceneScript> {
        let statics = file
            .statics
            .into_iter()
            .map(|s| match s {
                ShapeFile::GroundPlane {
                    z,
                    object_id,
                    reflectivity,
                } => ScenePrimitive {
                    shape: Shape::GroundPlane { z },
                    object_id,
                    reflectivity,
                },
                ShapeFile::Box {
                    center,
                    extents,
                    yaw_deg,
                    object_id,
                    reflectivity,
                } => ScenePrimitive {
                    shape: Shape::Box(Box3D::new(
                        vec3(center),
                        extents[0],
                        extents[1],
                        extents[2],
                        yaw_deg.to_radians(),
                    )),
                    object_id,
                    reflectivity,
                },
                ShapeFile::Cylinder {
                    base,
                    radius,
                    height,
                    object_id,
                    reflectivity,
                } => ScenePrimitive {
                    shape: Shape::Cylinder {
                        base: vec3(base),
                        radius,
                        height,
                    },
                    object_id,
                    reflectivity,
                },
                ShapeFile::Sphere {
                    center,
                    radius,
                    object_id,
                    reflectivity,
                } => ScenePrimitive {
                    shape: Shape::Sphere {
                        center: vec3(center),
                        radius,
                    },
                    object_id,
                    reflectivity,
                },
            })
            .collect();

        let persons = file
            .persons
            .into_iter()
            .map(|p| PersonInstance {
                model: PersonModel {
                    height: p.height,
                    body_radius: p.body_radius,
                    object_id: p.object_id,
                    reflectivity: p.reflectivity,
                },
                trajectory: Trajectory {
                    waypoints: p.trajectory.waypoints.iter().map(|w| (w[0], w[1])).collect(),
                    speed: p.trajectory.speed,
                    start_time: p.trajectory.start_time,
                },
            })
            .collect();

        let frame_times = match file.frame_times {
            FrameTimesFile::List(v) => v,
            FrameTimesFile::Schedule { start, count, dt } => {
                if !(dt > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "frame schedule dt must be positive, got {dt}"
                    )));
                }
                (0..count).map(|i| start + i as f64 * dt).collect()
            }
        };

        let script = SceneScript {
            statics,
            persons,
            mount: SensorMount {
                position: vec3(file.mount.position),
                tilt: file.mount.tilt_deg.to_radians(),
                heading: file.mount.heading_deg.to_radians(),
            },
            scan: ScanConfig {
                num_scanlines: file.sensor.num_scanlines,
                points_per_line: file.sensor.points_per_line,
                fov_h: file.sensor.fov_h_deg.to_radians(),
                fov_v: file.sensor.fov_v_deg.to_radians(),
                frame_rate: file.sensor.frame_rate_hz,
            },
            frame_times,
            seed: file.seed,
        };
        script.validate()?;
        Ok(script)
    }
}
