//! Subcommand implementations. Each handler maps module errors onto the
//! exit-code contract and keeps output bytes independent of the worker
//! count: every written file's content depends only on its frame.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use memslidar::dataset::{
    self, derive_seed, Augmentation, DatasetManifest, ManifestEntry, MirrorAxis, MixSpec, Source,
};
use memslidar::eval::{self, ApMode, Detection, PredictionsManifest};
use memslidar::geometry::Vec3;
use memslidar::scanpattern::ScanConfig;
use memslidar::scene::{SceneScript, SensorMount};
use memslidar::sensor::{
    add_range_noise, depth_camera_intrinsics, ingest_external_depth, simulate_frame_depthpath,
    simulate_frame_direct, write_depth_file, FrameConvention, Label, SimOptions,
};

use crate::{Axis, AugmentOp, CliError, CliResult, GenPath, WORKERS_ENV};

fn parse_resolution(s: &str) -> CliResult<(u32, u32)> {
    let parts: Vec<&str> = s.split('x').collect();
    let parsed = if parts.len() == 2 {
        match (parts[0].parse::<u32>(), parts[1].parse::<u32>()) {
            (Ok(w), Ok(h)) if w > 0 && h > 0 => Some((w, h)),
            _ => None,
        }
    } else {
        None
    };
    parsed.ok_or_else(|| CliError::Usage(format!("invalid resolution {s:?}, expected WxH")))
}

/// Builds the worker pool: `--workers`, else the environment override,
/// else one worker per logical core.
fn thread_pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let n = match workers {
        Some(n) => n,
        None => std::env::var(WORKERS_ENV)
            .ok()
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("{WORKERS_ENV} must be an integer, got {v:?}"))
                })
            })
            .transpose()?
            .unwrap_or(0),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Data(format!("failed to build worker pool: {e}")))
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn frame_file(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("{idx:06}.bin"))
}

fn label_file(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("{idx:06}.txt"))
}

fn mount_json(mount: &SensorMount) -> serde_json::Value {
    serde_json::json!({
        "position": [mount.position.x, mount.position.y, mount.position.z],
        "tilt_deg": mount.tilt.to_degrees(),
        "heading_deg": mount.heading.to_degrees(),
    })
}

fn sensor_json(scan: &ScanConfig) -> serde_json::Value {
    serde_json::json!({
        "num_scanlines": scan.num_scanlines,
        "points_per_line": scan.points_per_line,
        "fov_h_deg": scan.fov_h.to_degrees(),
        "fov_v_deg": scan.fov_v.to_degrees(),
        "frame_rate_hz": scan.frame_rate,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    scene_path: &Path,
    out: &Path,
    path: GenPath,
    resolution: &str,
    noise_sigma: f64,
    seed: Option<u64>,
    min_points: usize,
    max_range: f64,
    workers: Option<usize>,
) -> CliResult<()> {
    let resolution = parse_resolution(resolution)?;
    if noise_sigma < 0.0 {
        return Err(CliError::Usage(format!(
            "--noise-sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let scene = SceneScript::load(scene_path)?;
    for w in scene.warnings() {
        eprintln!("warning: {w}");
    }
    let seed = seed.unwrap_or(scene.seed);
    let opts = SimOptions {
        max_range,
        min_points,
    };
    let frames_dir = out.join("frames");
    let labels_dir = out.join("labels");
    create_dir(&frames_dir)?;
    create_dir(&labels_dir)?;

    let mut counts: Vec<(usize, usize)> = Vec::new();
    if scene.frame_times.is_empty() {
        eprintln!("warning: scene has no frame times; writing an empty dataset");
    } else {
        let pool = thread_pool(workers)?;
        let results: Vec<memslidar::Result<(usize, usize)>> = pool.install(|| {
            scene
                .frame_times
                .par_iter()
                .enumerate()
                .map(|(idx, &t)| {
                    let (mut frame, labels) = match path {
                        GenPath::Direct => simulate_frame_direct(&scene, t, idx as u64, &opts)?,
                        GenPath::Depth => {
                            simulate_frame_depthpath(&scene, t, idx as u64, resolution, &opts)?
                        }
                    };
                    if noise_sigma > 0.0 {
                        frame = add_range_noise(&frame, noise_sigma, derive_seed(seed, idx as u64))?;
                    }
                    dataset::write_frame(
                        &frame,
                        &labels,
                        &frame_file(&frames_dir, idx),
                        &label_file(&labels_dir, idx),
                    )?;
                    Ok((frame.len(), labels.len()))
                })
                .collect()
        });
        counts = results.into_iter().collect::<memslidar::Result<_>>()?;
    }

    let entries = (0..counts.len())
        .map(|idx| ManifestEntry {
            frame: frame_file(&frames_dir, idx),
            labels: label_file(&labels_dir, idx),
            source: Source::Synthetic,
            frame_id: idx as u64,
        })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("convention".into(), serde_json::json!("sensor-raw"));
    metadata.insert("mount".into(), mount_json(&scene.mount));
    metadata.insert("sensor".into(), sensor_json(&scene.scan));
    metadata.insert(
        "generator".into(),
        serde_json::json!({
            "path": match path { GenPath::Direct => "direct", GenPath::Depth => "depth" },
            "resolution": format!("{}x{}", resolution.0, resolution.1),
            "noise_sigma": noise_sigma,
            "min_points": min_points,
            "max_range": max_range,
        }),
    );
    let manifest = DatasetManifest {
        seed,
        metadata,
        entries,
    };
    let manifest_path = out.join("manifest.json");
    manifest.save(&manifest_path)?;

    let total_points: usize = counts.iter().map(|c| c.0).sum();
    let total_labels: usize = counts.iter().map(|c| c.1).sum();
    println!("frames: {}", counts.len());
    println!("points: {total_points}");
    println!("labels: {total_labels}");
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

/// Poses file accompanying rendered depth frames; everything ingestion
/// needs to rebuild clouds. Angles in degrees, like all files.
#[derive(Debug, Serialize, Deserialize)]
struct PosesFile {
    sensor: serde_json::Value,
    resolution: (u32, u32),
    mounts: Vec<MountPose>,
    frame_ids: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MountPose {
    position: [f64; 3],
    tilt_deg: f64,
    #[serde(default)]
    heading_deg: f64,
}

fn scan_from_sensor_json(v: &serde_json::Value) -> CliResult<ScanConfig> {
    let field = |name: &str| {
        v.get(name)
            .and_then(|x| x.as_f64())
            .ok_or_else(|| CliError::Data(format!("poses file sensor entry is missing {name}")))
    };
    let cfg = ScanConfig {
        num_scanlines: field("num_scanlines")? as u32,
        points_per_line: field("points_per_line")? as u32,
        fov_h: field("fov_h_deg")?.to_radians(),
        fov_v: field("fov_v_deg")?.to_radians(),
        frame_rate: field("frame_rate_hz")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn render_depth(
    scene_path: &Path,
    out: &Path,
    resolution: &str,
    max_range: f64,
    workers: Option<usize>,
) -> CliResult<()> {
    let resolution = parse_resolution(resolution)?;
    let scene = SceneScript::load(scene_path)?;
    let k = depth_camera_intrinsics(&scene.scan, resolution)?;
    let depth_dir = out.join("depth");
    create_dir(&depth_dir)?;

    let pose = scene.mount.to_transform();
    let pool = thread_pool(workers)?;
    let results: Vec<memslidar::Result<()>> = pool.install(|| {
        scene
            .frame_times
            .par_iter()
            .enumerate()
            .map(|(idx, &t)| {
                let snapshot = scene.snapshot_at(t)?;
                let img = snapshot.render_depth(&pose, &k, max_range)?;
                write_depth_file(&depth_dir.join(format!("{idx:06}.mdpt")), &img)
            })
            .collect()
    });
    results.into_iter().collect::<memslidar::Result<()>>()?;

    let poses = PosesFile {
        sensor: sensor_json(&scene.scan),
        resolution,
        mounts: scene
            .frame_times
            .iter()
            .map(|_| MountPose {
                position: [
                    scene.mount.position.x,
                    scene.mount.position.y,
                    scene.mount.position.z,
                ],
                tilt_deg: scene.mount.tilt.to_degrees(),
                heading_deg: scene.mount.heading.to_degrees(),
            })
            .collect(),
        frame_ids: (0..scene.frame_times.len() as u64).collect(),
    };
    let poses_path = out.join("poses.json");
    std::fs::write(
        &poses_path,
        serde_json::to_string_pretty(&poses).expect("poses serialize") + "\n",
    )
    .map_err(|e| CliError::Data(format!("cannot write {}: {e}", poses_path.display())))?;

    println!("depth frames: {}", scene.frame_times.len());
    println!("poses: {}", poses_path.display());
    Ok(())
}

pub fn ingest(
    depth_dir: &Path,
    poses_path: &Path,
    out: &Path,
    keep_partial: bool,
    source: &str,
    workers: Option<usize>,
) -> CliResult<()> {
    let source = match source {
        "real" => Source::Real,
        "synthetic" => Source::Synthetic,
        other => {
            return Err(CliError::Usage(format!(
                "--source must be real or synthetic, got {other:?}"
            )))
        }
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(depth_dir)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", depth_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "mdpt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no depth frames found in {}",
            depth_dir.display()
        )));
    }

    let poses_text = std::fs::read_to_string(poses_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", poses_path.display())))?;
    let poses: PosesFile = serde_json::from_str(&poses_text)
        .map_err(|e| CliError::Data(format!("malformed poses file {}: {e}", poses_path.display())))?;
    if poses.mounts.len() != files.len() {
        return Err(CliError::Data(format!(
            "pose count ({}) does not match depth-file count ({})",
            poses.mounts.len(),
            files.len()
        )));
    }
    let scan = scan_from_sensor_json(&poses.sensor)?;
    let k = depth_camera_intrinsics(&scan, poses.resolution)?;

    let frames_dir = out.join("frames");
    let labels_dir = out.join("labels");
    create_dir(&frames_dir)?;
    create_dir(&labels_dir)?;

    let pool = thread_pool(workers)?;
    let results: Vec<(usize, memslidar::Result<usize>)> = pool.install(|| {
        files
            .par_iter()
            .enumerate()
            .map(|(idx, file)| {
                let run = || -> memslidar::Result<usize> {
                    let mount = &poses.mounts[idx];
                    let pose = SensorMount {
                        position: Vec3::new(mount.position[0], mount.position[1], mount.position[2]),
                        tilt: mount.tilt_deg.to_radians(),
                        heading: mount.heading_deg.to_radians(),
                    }
                    .to_transform();
                    let frame_id = poses.frame_ids.get(idx).copied().unwrap_or(idx as u64);
                    let frame = ingest_external_depth(file, &pose, &k, &scan, frame_id)?;
                    dataset::write_frame(
                        &frame,
                        &[],
                        &frame_file(&frames_dir, idx),
                        &label_file(&labels_dir, idx),
                    )?;
                    Ok(frame.len())
                };
                (idx, run())
            })
            .collect()
    });

    let errors: Vec<String> = results
        .iter()
        .filter_map(|(idx, r)| {
            r.as_ref()
                .err()
                .map(|e| format!("{}: {e}", files[*idx].display()))
        })
        .collect();
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("error: {e}");
        }
        if !keep_partial {
            let _ = std::fs::remove_dir_all(out);
            return Err(CliError::Data(format!(
                "{} of {} depth frames failed to ingest; partial output removed",
                errors.len(),
                files.len()
            )));
        }
        return Err(CliError::Data(format!(
            "{} of {} depth frames failed to ingest; partial output kept (--keep-partial)",
            errors.len(),
            files.len()
        )));
    }

    let entries = (0..files.len())
        .map(|idx| ManifestEntry {
            frame: frame_file(&frames_dir, idx),
            labels: label_file(&labels_dir, idx),
            source,
            frame_id: poses.frame_ids.get(idx).copied().unwrap_or(idx as u64),
        })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("convention".into(), serde_json::json!("sensor-raw"));
    metadata.insert("sensor".into(), poses.sensor.clone());
    metadata.insert(
        "ingest".into(),
        serde_json::json!({
            "depth_dir": depth_dir.display().to_string(),
            "poses": poses_path.display().to_string(),
        }),
    );
    let manifest = DatasetManifest {
        seed: 0,
        metadata,
        entries,
    };
    manifest.save(&out.join("manifest.json"))?;

    let total: usize = results.iter().map(|(_, r)| r.as_ref().copied().unwrap_or(0)).sum();
    println!("frames: {}", files.len());
    println!("points: {total}");
    Ok(())
}

fn resolve_mount(
    height: Option<f64>,
    tilt_deg: Option<f64>,
    preset: Option<&str>,
) -> CliResult<SensorMount> {
    let (height, tilt_deg) = match (height, tilt_deg, preset) {
        (Some(h), Some(t), None) => (h, t),
        (None, None, Some(name)) => match name {
            "smartfactory-entrance" => (5.0, 23.0),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown mount preset {other:?}; known presets: smartfactory-entrance"
                )))
            }
        },
        _ => {
            return Err(CliError::Usage(
                "specify either --height with --tilt-deg, or --preset".into(),
            ))
        }
    };
    let mount = SensorMount {
        position: Vec3::new(0.0, 0.0, height),
        tilt: tilt_deg.to_radians(),
        heading: 0.0,
    };
    mount.validate()?;
    Ok(mount)
}

pub fn normalize(
    manifest_path: &Path,
    out: &Path,
    height: Option<f64>,
    tilt_deg: Option<f64>,
    preset: Option<&str>,
    workers: Option<usize>,
) -> CliResult<()> {
    let mount = resolve_mount(height, tilt_deg, preset)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    if manifest.convention() == FrameConvention::Normalized {
        return Err(CliError::Data("dataset is already normalized".into()));
    }
    let frames_dir = out.join("frames");
    let labels_dir = out.join("labels");
    create_dir(&frames_dir)?;
    create_dir(&labels_dir)?;

    let pool = thread_pool(workers)?;
    let results: Vec<memslidar::Result<()>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .enumerate()
            .map(|(idx, entry)| {
                let (frame, labels) = dataset::read_frame(
                    &entry.frame,
                    &entry.labels,
                    entry.frame_id,
                    FrameConvention::SensorRaw,
                )?;
                let (frame, labels) = dataset::normalize(&frame, &labels, &mount)?;
                dataset::write_frame(
                    &frame,
                    &labels,
                    &frame_file(&frames_dir, idx),
                    &label_file(&labels_dir, idx),
                )
            })
            .collect()
    });
    results.into_iter().collect::<memslidar::Result<()>>()?;

    let entries = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(idx, entry)| ManifestEntry {
            frame: frame_file(&frames_dir, idx),
            labels: label_file(&labels_dir, idx),
            source: entry.source,
            frame_id: entry.frame_id,
        })
        .collect();
    let mut metadata = manifest.metadata.clone();
    metadata.insert("convention".into(), serde_json::json!("normalized"));
    metadata.insert("normalization_mount".into(), mount_json(&mount));
    let out_manifest = DatasetManifest {
        seed: manifest.seed,
        metadata,
        entries,
    };
    let manifest_out = out.join("manifest.json");
    out_manifest.save(&manifest_out)?;
    println!("normalized frames: {}", out_manifest.len());
    println!("manifest: {}", manifest_out.display());
    Ok(())
}

pub fn mix(
    real: &Path,
    synthetic: &Path,
    synthetic_fraction: f64,
    total: usize,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    let real = DatasetManifest::load(real)?;
    let synthetic = DatasetManifest::load(synthetic)?;
    let spec = MixSpec {
        synthetic_fraction,
        total_count: total,
    };
    let mixed = dataset::mix(&real, &synthetic, &spec, seed)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            create_dir(parent)?;
        }
    }
    mixed.save(out)?;
    let (synthetic_count, real_count) = spec.counts();
    println!("synthetic: {synthetic_count}, real: {real_count}");
    println!("manifest: {}", out.display());
    Ok(())
}

pub fn split(manifest_path: &Path, train_fraction: f64, seed: u64, out: &Path) -> CliResult<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let (train, validation) = dataset::split(&manifest, train_fraction, seed)?;
    create_dir(out)?;
    train.save(&out.join("train.json"))?;
    validation.save(&out.join("validation.json"))?;
    println!("train: {}, validation: {}", train.len(), validation.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn augment(
    manifest_path: &Path,
    op: AugmentOp,
    angle: Option<f64>,
    max_angle: f64,
    factor: Option<f64>,
    factor_range: (f64, f64),
    axis: Option<Axis>,
    seed: u64,
    out: &Path,
    workers: Option<usize>,
) -> CliResult<()> {
    if op == AugmentOp::Mirror && axis.is_none() {
        return Err(CliError::Usage("--op mirror requires --axis".into()));
    }
    if factor_range.0 > factor_range.1 {
        return Err(CliError::Usage(format!(
            "--factor-min {} exceeds --factor-max {}",
            factor_range.0, factor_range.1
        )));
    }
    let manifest = DatasetManifest::load(manifest_path)?;
    let frames_dir = out.join("frames");
    let labels_dir = out.join("labels");
    create_dir(&frames_dir)?;
    create_dir(&labels_dir)?;

    // Per-frame augmentation choice, seeded by frame id so the result is
    // independent of worker scheduling.
    let pick = |frame_id: u64| -> Augmentation {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, frame_id));
        match op {
            AugmentOp::Rotate => match angle {
                Some(deg) => Augmentation::Rotate {
                    angle: deg.to_radians(),
                },
                None => Augmentation::sample_rotate(max_angle.to_radians(), &mut rng),
            },
            AugmentOp::Scale => match factor {
                Some(f) => Augmentation::Scale { factor: f },
                None => Augmentation::sample_scale(factor_range, &mut rng),
            },
            AugmentOp::Mirror => Augmentation::Mirror {
                axis: match axis.expect("checked above") {
                    Axis::X => MirrorAxis::X,
                    Axis::Y => MirrorAxis::Y,
                },
            },
        }
    };

    let convention = manifest.convention();
    let pool = thread_pool(workers)?;
    let results: Vec<memslidar::Result<()>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .enumerate()
            .map(|(idx, entry)| {
                let (frame, labels) =
                    dataset::read_frame(&entry.frame, &entry.labels, entry.frame_id, convention)?;
                let (frame, labels) = dataset::augment(&frame, &labels, &pick(entry.frame_id))?;
                dataset::write_frame(
                    &frame,
                    &labels,
                    &frame_file(&frames_dir, idx),
                    &label_file(&labels_dir, idx),
                )
            })
            .collect()
    });
    results.into_iter().collect::<memslidar::Result<()>>()?;

    let entries = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(idx, entry)| ManifestEntry {
            frame: frame_file(&frames_dir, idx),
            labels: label_file(&labels_dir, idx),
            source: entry.source,
            frame_id: entry.frame_id,
        })
        .collect();
    let mut metadata = manifest.metadata.clone();
    metadata.insert(
        "augment".into(),
        serde_json::json!({
            "op": format!("{op:?}").to_lowercase(),
            "seed": seed,
        }),
    );
    let out_manifest = DatasetManifest {
        seed,
        metadata,
        entries,
    };
    out_manifest.save(&out.join("manifest.json"))?;
    println!("augmented frames: {}", out_manifest.len());
    Ok(())
}

pub fn stats(manifest_path: &Path) -> CliResult<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let s = dataset::stats(&manifest)?;
    println!(
        "frames: {} (real: {}, synthetic: {})",
        s.frames, s.real_frames, s.synthetic_frames
    );
    println!(
        "points: total {}, per frame min {} / mean {:.1} / max {}",
        s.total_points, s.min_points_per_frame, s.mean_points_per_frame, s.max_points_per_frame
    );
    println!(
        "labels: total {}, points per box min {} / mean {:.1} / max {}",
        s.total_labels, s.min_points_per_box, s.mean_points_per_box, s.max_points_per_box
    );
    println!("persons per frame:");
    for (persons, frames) in &s.persons_per_frame {
        println!("  {persons}: {frames} frames");
    }
    Ok(())
}

pub fn evaluate(
    predictions_path: &Path,
    ground_truth_path: &Path,
    iou: f64,
    ap_mode: &str,
    out: Option<&Path>,
) -> CliResult<()> {
    let mode: ApMode = ap_mode
        .parse()
        .map_err(|e: memslidar::Error| CliError::Usage(e.to_string()))?;
    if !(0.0..=1.0).contains(&iou) {
        return Err(CliError::Usage(format!(
            "--iou must be in [0, 1], got {iou}"
        )));
    }
    let gt_manifest = DatasetManifest::load(ground_truth_path)?;
    let pred_manifest = PredictionsManifest::load(predictions_path)?;

    let mut ground_truth: BTreeMap<u64, Vec<Label>> = BTreeMap::new();
    for entry in &gt_manifest.entries {
        ground_truth.insert(entry.frame_id, dataset::read_labels(&entry.labels)?);
    }
    let mut predictions: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for entry in &pred_manifest.entries {
        predictions.insert(
            entry.frame_id,
            eval::read_predictions(&entry.file, entry.frame_id)?,
        );
    }

    let report = eval::evaluate(&predictions, &ground_truth, iou)?;
    let headline = match mode {
        ApMode::ExactAuc => report.ap,
        ApMode::FortyPoint => report.ap_forty_point,
    };
    println!("AP = {headline:.4}");
    println!(
        "mode: {} (exact-auc {:.4}, forty-point {:.4})",
        ap_mode, report.ap, report.ap_forty_point
    );
    println!(
        "TP: {}  FP: {}  FN: {}  GT: {}  IoU threshold: {}",
        report.tp, report.fp, report.fn_count, report.total_gt, report.iou_threshold
    );
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&report).expect("report serialize");
        std::fs::write(out, text + "\n")
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
        println!("report: {}", out.display());
    }
    Ok(())
}
