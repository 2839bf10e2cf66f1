//! Frame and label files.
//!
//! Points: `.bin`, little-endian f32 in x, y, z, intensity order, 16 bytes
//! per point, no header — the layout detection toolchains consume
//! unchanged. Labels: `.txt`, one box per line:
//!
//! ```text
//! class cx cy cz dx dy dz yaw object_id num_points
//! ```
//!
//! with 6 decimal places on the floats. Readers also accept the plain
//! 7-field `class cx cy cz dx dy dz` form, defaulting yaw, object_id and
//! num_points to zero.

use std::io::Write;
use std::path::Path;

use crate::geometry::{Box3D, Vec3};
use crate::sensor::{FrameConvention, Label, Point, PointCloudFrame};
use crate::{Error, Result};

pub fn write_frame(
    frame: &PointCloudFrame,
    labels: &[Label],
    point_path: &Path,
    label_path: &Path,
) -> Result<()> {
    frame.validate()?;
    let mut buf = Vec::with_capacity(frame.points.len() * 16);
    for p in &frame.points {
        buf.extend_from_slice(&(p.x as f32).to_le_bytes());
        buf.extend_from_slice(&(p.y as f32).to_le_bytes());
        buf.extend_from_slice(&(p.z as f32).to_le_bytes());
        buf.extend_from_slice(&(p.intensity as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(point_path).map_err(|e| Error::io(point_path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(point_path, e))?;

    let mut text = String::new();
    for l in labels {
        let b = &l.box3;
        text.push_str(&format!(
            "{} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {} {}\n",
            l.class,
            b.center.x,
            b.center.y,
            b.center.z,
            b.dx,
            b.dy,
            b.dz,
            b.yaw,
            l.object_id,
            l.num_points
        ));
    }
    std::fs::write(label_path, text).map_err(|e| Error::io(label_path, e))
}

pub fn read_frame(
    point_path: &Path,
    label_path: &Path,
    frame_id: u64,
    convention: FrameConvention,
) -> Result<(PointCloudFrame, Vec<Label>)> {
    let bytes = std::fs::read(point_path).map_err(|e| Error::io(point_path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Malformed {
            path: point_path.to_path_buf(),
            message: format!(
                "point file length {} is not a multiple of 16 bytes",
                bytes.len()
            ),
        });
    }
    let points = bytes
        .chunks_exact(16)
        .map(|c| Point {
            x: f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
            y: f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            z: f32::from_le_bytes(c[8..12].try_into().unwrap()) as f64,
            intensity: f32::from_le_bytes(c[12..16].try_into().unwrap()) as f64,
        })
        .collect();

    let labels = read_labels(label_path)?;
    Ok((
        PointCloudFrame {
            points,
            frame_id,
            convention,
            provenance: None,
            sample_indices: None,
        },
        labels,
    ))
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(parse_label_line(line).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?);
    }
    Ok(labels)
}

fn parse_label_line(line: &str) -> std::result::Result<Label, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 7 && fields.len() != 10 {
        return Err(format!(
            "expected 7 or 10 fields, found {}",
            fields.len()
        ));
    }
    let class = fields[0].to_string();
    if class.is_empty() {
        return Err("empty class".into());
    }
    let mut nums = [0.0f64; 7];
    for (slot, field) in nums.iter_mut().zip(&fields[1..7]) {
        *slot = field
            .parse()
            .map_err(|_| format!("invalid number {field:?}"))?;
    }
    let (yaw, object_id, num_points) = if fields.len() == 10 {
        (
            fields[7]
                .parse::<f64>()
                .map_err(|_| format!("invalid yaw {:?}", fields[7]))?,
            fields[8]
                .parse::<u32>()
                .map_err(|_| format!("invalid object_id {:?}", fields[8]))?,
            fields[9]
                .parse::<usize>()
                .map_err(|_| format!("invalid num_points {:?}", fields[9]))?,
        )
    } else {
        (0.0, 0, 0)
    };
    let box3 = Box3D::new(
        Vec3::new(nums[0], nums[1], nums[2]),
        nums[3],
        nums[4],
        nums[5],
        yaw,
    );
    box3.validate().map_err(|e| e.to_string())?;
    Ok(Label {
        box3,
        class,
        object_id,
        num_points,
    })
}
