//! `memslidar` — batch front end for scan simulation, dataset operations,
//! and detection evaluation.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 usage error,
//! 2 data error (unreadable/malformed inputs, schema violations).

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "MEMSLIDAR_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "memslidar",
    about = "MEMS-LiDAR scan simulation, dataset tooling, and 3D detection evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum GenPath {
    Direct,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AugmentOp {
    Rotate,
    Scale,
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Axis {
    X,
    Y,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an annotated dataset from a scene script.
    Simulate {
        scene: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Generation path: exact raycast or the depth-image pipeline.
        #[arg(long, value_enum, default_value = "direct")]
        path: GenPath,
        /// Depth-camera resolution for the depth path, WxH.
        #[arg(long, default_value = "1024x768")]
        resolution: String,
        /// Gaussian range noise sigma in meters (0 disables).
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Overrides the scene's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Labels need at least this many points.
        #[arg(long, default_value_t = memslidar::sensor::DEFAULT_MIN_POINTS)]
        min_points: usize,
        /// Maximum sensing range in meters.
        #[arg(long, default_value_t = memslidar::scene::DEFAULT_MAX_RANGE)]
        max_range: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render depth images (MDPT files) plus a poses file for ingestion.
    RenderDepth {
        scene: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "1024x768")]
        resolution: String,
        #[arg(long, default_value_t = memslidar::scene::DEFAULT_MAX_RANGE)]
        max_range: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Build an unlabeled dataset from externally rendered depth frames.
    Ingest {
        depth_dir: PathBuf,
        /// Poses file written by render-depth (sensor, intrinsics, mounts).
        #[arg(long)]
        poses: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Keep whatever was written when some files fail to ingest.
        #[arg(long)]
        keep_partial: bool,
        /// Source tag recorded in the manifest.
        #[arg(long, default_value = "synthetic")]
        source: String,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Remove mount tilt and height from a dataset.
    Normalize {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Mount height in meters (with --tilt-deg).
        #[arg(long, conflicts_with = "preset")]
        height: Option<f64>,
        /// Mount tilt in degrees (with --height).
        #[arg(long, conflicts_with = "preset")]
        tilt_deg: Option<f64>,
        /// Named mount preset, e.g. smartfactory-entrance (5 m / 23 deg).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compose a dataset from real and synthetic pools at a fixed ratio.
    Mix {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long)]
        synthetic_fraction: f64,
        #[arg(long)]
        total: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output manifest path.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Split a dataset into train and validation manifests.
    Split {
        manifest: PathBuf,
        #[arg(long)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for train.json and validation.json.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Apply a geometric augmentation to every frame of a dataset.
    Augment {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        op: AugmentOp,
        /// Fixed rotation angle in degrees; omit to sample per frame.
        #[arg(long)]
        angle: Option<f64>,
        /// Half-range for sampled rotation, degrees.
        #[arg(long, default_value_t = 45.0)]
        max_angle: f64,
        /// Fixed scale factor; omit to sample per frame.
        #[arg(long)]
        factor: Option<f64>,
        #[arg(long, default_value_t = 0.95)]
        factor_min: f64,
        #[arg(long, default_value_t = 1.05)]
        factor_max: f64,
        /// Mirror axis (the negated coordinate).
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print aggregate statistics of a dataset.
    Stats { manifest: PathBuf },
    /// Score predictions against ground truth (AP at an IoU threshold).
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        ground_truth: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// Headline AP mode; the report always carries both.
        #[arg(long, default_value = "exact-auc")]
        ap_mode: String,
        /// Structured report output path.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Error split matching the exit-code contract.
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<memslidar::Error> for CliError {
    fn from(e: memslidar::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            scene,
            out,
            path,
            resolution,
            noise_sigma,
            seed,
            min_points,
            max_range,
            workers,
        } => commands::simulate(
            &scene,
            &out,
            path,
            &resolution,
            noise_sigma,
            seed,
            min_points,
            max_range,
            workers,
        ),
        Command::RenderDepth {
            scene,
            out,
            resolution,
            max_range,
            workers,
        } => commands::render_depth(&scene, &out, &resolution, max_range, workers),
        Command::Ingest {
            depth_dir,
            poses,
            out,
            keep_partial,
            source,
            workers,
        } => commands::ingest(&depth_dir, &poses, &out, keep_partial, &source, workers),
        Command::Normalize {
            manifest,
            out,
            height,
            tilt_deg,
            preset,
            workers,
        } => commands::normalize(&manifest, &out, height, tilt_deg, preset.as_deref(), workers),
        Command::Mix {
            real,
            synthetic,
            synthetic_fraction,
            total,
            seed,
            out,
        } => commands::mix(&real, &synthetic, synthetic_fraction, total, seed, &out),
        Command::Split {
            manifest,
            train_fraction,
            seed,
            out,
        } => commands::split(&manifest, train_fraction, seed, &out),
        Command::Augment {
            manifest,
            op,
            angle,
            max_angle,
            factor,
            factor_min,
            factor_max,
            axis,
            seed,
            out,
            workers,
        } => commands::augment(
            &manifest,
            op,
            angle,
            max_angle,
            factor,
            (factor_min, factor_max),
            axis,
            seed,
            &out,
            workers,
        ),
        Command::Stats { manifest } => commands::stats(&manifest),
        Command::Evaluate {
            predictions,
            ground_truth,
            iou,
            ap_mode,
            out,
        } => commands::evaluate(&predictions, &ground_truth, iou, &ap_mode, out.as_deref()),
    }
}
