//! MEMS mirror scan trajectory for one frame.
//!
//! The mirror samples uniformly in time. Over a frame of `N = num_scanlines
//! * points_per_line` samples with normalized time `t = i / (N - 1)`:
//!
//! ```text
//! azimuth(t)   = (fov_h / 2) * sin(pi * num_scanlines * t)
//! elevation(t) = (fov_v / 2) * cos(pi * t)
//! ```
//!
//! The fast horizontal sinusoid completes `num_scanlines` half-periods per
//! frame while the slow vertical cosine sweeps once from the top of the
//! field of view to the bottom — the characteristic solid-state "eye"
//! pattern with denser coverage at the vertical extremes. Positive azimuth
//! is left, positive elevation is up.

use serde::{Deserialize, Serialize};

use crate::geometry::CameraIntrinsics;
use crate::{Error, Result};

/// Mirror parameters. Angles are radians, defaults match the 200-line
/// 72x30 degree sensor setup used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub num_scanlines: u32,
    pub fov_h: f64,
    pub fov_v: f64,
    pub points_per_line: u32,
    /// Metadata only; does not influence the generated pattern.
    pub frame_rate: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            num_scanlines: 200,
            fov_h: 72.0f64.to_radians(),
            fov_v: 30.0f64.to_radians(),
            points_per_line: 100,
            frame_rate: 10.0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_scanlines < 2 || !self.num_scanlines.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "num_scanlines must be even and >= 2, got {}",
                self.num_scanlines
            )));
        }
        if self.points_per_line < 2 {
            return Err(Error::InvalidConfig(format!(
                "points_per_line must be >= 2, got {}",
                self.points_per_line
            )));
        }
        for (name, v) in [("fov_h", self.fov_h), ("fov_v", self.fov_v)] {
            if !(v > 0.0 && v < std::f64::consts::PI) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in (0, pi), got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn samples_per_frame(&self) -> usize {
        self.num_scanlines as usize * self.points_per_line as usize
    }
}

/// One beam direction of the scan pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanDirection {
    /// Horizontal deflection, positive = left.
    pub azimuth: f64,
    /// Vertical deflection, positive = up.
    pub elevation: f64,
    pub sample_index: usize,
}

/// Generates the full ordered direction sequence for one frame.
/// Deterministic: identical configs yield bit-identical sequences.
pub fn generate_scan_directions(cfg: &ScanConfig) -> Result<Vec<ScanDirection>> {
    cfg.validate()?;
    let n = cfg.samples_per_frame();
    let half_h = cfg.fov_h / 2.0;
    let half_v = cfg.fov_v / 2.0;
    let lines = cfg.num_scanlines as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        out.push(ScanDirection {
            azimuth: half_h * (std::f64::consts::PI * lines * t).sin(),
            elevation: half_v * (std::f64::consts::PI * t).cos(),
            sample_index: i,
        });
    }
    Ok(out)
}

/// Maps scan directions onto depth-image pixels through `k`.
///
/// Each direction becomes a camera-convention ray at unit depth,
/// `(-tan(azimuth), -tan(elevation), 1)`, so positive azimuth (left) lands
/// at smaller `u` and positive elevation (up) at smaller `v`. The projected
/// coordinates are rounded to the nearest pixel center, then clamped to the
/// image. A ray that falls outside the image by more than one pixel before
/// clamping signals a FoV/intrinsics mismatch and is an error.
pub fn directions_to_pixels(
    dirs: &[ScanDirection],
    k: &CameraIntrinsics,
) -> Result<Vec<(u32, u32)>> {
    k.validate()?;
    let w = k.width as f64;
    let h = k.height as f64;
    let mut out = Vec::with_capacity(dirs.len());
    for d in dirs {
        let u = k.cx - k.fx * d.azimuth.tan();
        let v = k.cy - k.fy * d.elevation.tan();
        if !(-1.0..=w).contains(&u) || !(-1.0..=h).contains(&v) {
            return Err(Error::InvalidInput(format!(
                "scan direction (az {:.4}, el {:.4}) maps to pixel ({u:.2}, {v:.2}) \
                 outside the {}x{} image by more than one pixel",
                d.azimuth, d.elevation, k.width, k.height
            )));
        }
        let up = (u.round().max(0.0) as u32).min(k.width - 1);
        let vp = (v.round().max(0.0) as u32).min(k.height - 1);
        out.push((up, vp));
    }
    Ok(out)
}
