//! Prediction files and their manifest.
//!
//! A prediction file holds one frame's detections, one per line:
//!
//! ```text
//! class cx cy cz dx dy dz yaw confidence
//! ```
//!
//! The manifest mirrors the dataset manifest: a JSON document listing
//! `{file, frame_id}` entries with paths relative to the manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{Box3D, Vec3};
use crate::{Error, Result};

use super::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub file: PathBuf,
    pub frame_id: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionsManifest {
    pub entries: Vec<PredictionEntry>,
}

impl PredictionsManifest {
    pub fn load(path: &Path) -> Result<PredictionsManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: PredictionsManifest =
            serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut manifest.entries {
            if entry.file.is_relative() {
                entry.file = base.join(&entry.file);
            }
            if !entry.file.exists() {
                return Err(Error::InvalidInput(format!(
                    "predictions manifest {} references missing file {}",
                    path.display(),
                    entry.file.display()
                )));
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut on_disk = self.clone();
        for entry in &mut on_disk.entries {
            if let Ok(rel) = entry.file.strip_prefix(base) {
                entry.file = rel.to_path_buf();
            }
        }
        let text = serde_json::to_string_pretty(&on_disk).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn read_predictions(path: &Path, frame_id: u64) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(parse(format!("expected 9 fields, found {}", fields.len())));
        }
        let mut nums = [0.0f64; 8];
        for (slot, field) in nums.iter_mut().zip(&fields[1..9]) {
            *slot = field
                .parse()
                .map_err(|_| parse(format!("invalid number {field:?}")))?;
        }
        let det = Detection {
            box3: Box3D::new(
                Vec3::new(nums[0], nums[1], nums[2]),
                nums[3],
                nums[4],
                nums[5],
                nums[6],
            ),
            confidence: nums[7],
            frame_id,
        };
        det.validate().map_err(|e| parse(e.to_string()))?;
        out.push(det);
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, dets: &[Detection]) -> Result<()> {
    let mut text = String::new();
    for d in dets {
        let b = &d.box3;
        text.push_str(&format!(
            "person {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}\n",
            b.center.x, b.center.y, b.center.z, b.dx, b.dy, b.dz, b.yaw, d.confidence
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
