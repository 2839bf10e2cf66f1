//! MEMS-LiDAR simulation and dataset toolchain.
//!
//! The crate turns declarative scene scripts into automatically annotated
//! 3D point-cloud frames the way a solid-state MEMS scanner would sample
//! them, and provides the dataset plumbing around that: normalization,
//! real/synthetic mixing, seeded splits, augmentation, and AP\@IoU
//! evaluation for 3D person detection.
//!
//! Modules, bottom-up:
//!
//! - [`geometry`]: rigid transforms, pinhole intrinsics, oriented boxes.
//! - [`scanpattern`]: the mirror's angular trajectory for one frame.
//! - [`scene`]: scene scripts, analytic raycasting, virtual depth camera.
//! - [`sensor`]: scene + scan pattern -> annotated point-cloud frames.
//! - [`dataset`]: frame/label files, manifests, normalize/mix/split/augment.
//! - [`eval`]: rotated-box IoU, matching, average precision.

// Validation sites use `!(x > 0.0)` deliberately: the negated form also
// rejects NaN, which a plain `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod scanpattern;
pub mod scene;
pub mod sensor;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its documented range or invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An operation was called with arguments outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A text file (labels, predictions) failed to parse; line is 1-based.
    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A binary file (points, depth) is malformed.
    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    /// Frame ids present on one side of an evaluation but not the other.
    #[error("frame id mismatch: {0}")]
    FrameMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
