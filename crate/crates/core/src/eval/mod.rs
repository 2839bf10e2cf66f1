//! 3D detection evaluation: rotated-box IoU, greedy confidence-ordered
//! matching, precision/recall, and interpolated average precision.
//!
//! Matching protocol: detections are processed in descending confidence
//! (ties broken by ascending box-center distance to the origin, then input
//! order); each detection claims the unmatched ground-truth box of highest
//! IoU if that IoU reaches the threshold, otherwise it is a false
//! positive. Unclaimed ground truth counts as false negatives.
//!
//! AP accumulates precision/recall at distinct-confidence boundaries (tied
//! detections enter together, matching an every-threshold evaluation) and
//! integrates the precision envelope. Two modes: `exact-auc` (area under
//! the envelope, the default) and `forty-point` (mean envelope precision
//! at recalls 1/40 .. 40/40).

mod io;

pub use io::{read_predictions, write_predictions, PredictionEntry, PredictionsManifest};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Box3D;
use crate::sensor::Label;
use crate::{Error, Result};

/// Footprint intersections below this area count as empty.
const MIN_FOOTPRINT_AREA: f64 = 1e-12;

/// A predicted box with its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub box3: Box3D,
    /// Unitless in [0, 1].
    pub confidence: f64,
    pub frame_id: u64,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        self.box3.validate()?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::InvalidInput(format!(
                "confidence must be in [0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// AP interpolation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    ExactAuc,
    FortyPoint,
}

impl std::str::FromStr for ApMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-auc" => Ok(ApMode::ExactAuc),
            "forty-point" | "40-point" => Ok(ApMode::FortyPoint),
            other => Err(Error::InvalidInput(format!("unknown AP mode {other:?}"))),
        }
    }
}

/// Evaluation outcome: AP in both modes plus the raw curves and counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Exact-auc AP (the default mode).
    pub ap: f64,
    pub ap_forty_point: f64,
    pub iou_threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
    pub total_gt: usize,
    /// Cumulative precision over the confidence-sorted detection sequence.
    pub precision: Vec<f64>,
    /// Cumulative recall over the same sequence.
    pub recall: Vec<f64>,
}

/// Rotated-box IoU: the footprint rectangles are intersected by convex
/// polygon clipping, the area by the shoelace formula, and the volume is
/// footprint area times vertical overlap. Symmetric, in [0, 1].
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let (az0, az1) = a.z_interval();
    let (bz0, bz1) = b.z_interval();
    let dz = (az1.min(bz1) - az0.max(bz0)).max(0.0);
    if dz == 0.0 {
        return 0.0;
    }
    let footprint = clip_convex(&a.footprint(), &b.footprint());
    let mut area = shoelace(&footprint);
    if area < MIN_FOOTPRINT_AREA {
        area = 0.0;
    }
    let intersection = area * dz;
    if intersection == 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - intersection;
    intersection / union
}

/// Sutherland-Hodgman clip of a convex subject polygon by a convex CCW
/// clip polygon; the result has at most `subject.len() + clip.len()`
/// vertices.
fn clip_convex(subject: &[(f64, f64); 4], clip: &[(f64, f64); 4]) -> Vec<(f64, f64)> {
    let mut output: Vec<(f64, f64)> = subject.to_vec();
    for i in 0..4 {
        let a = clip[i];
        let b = clip[(i + 1) % 4];
        let input = std::mem::take(&mut output);
        if input.is_empty() {
            break;
        }
        let side = |p: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let mut prev = *input.last().unwrap();
        let mut prev_side = side(prev);
        for &cur in &input {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(edge_intersection(prev, cur, prev_side, cur_side));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(edge_intersection(prev, cur, prev_side, cur_side));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

/// Intersection of segment `p..q` with the clip line, parameterized by the
/// signed areas `sp`, `sq` of the endpoints against that line.
fn edge_intersection(p: (f64, f64), q: (f64, f64), sp: f64, sq: f64) -> (f64, f64) {
    let t = sp / (sp - sq);
    (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
}

fn shoelace(polygon: &[(f64, f64)]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..polygon.len() {
        let (x0, y0) = polygon[i];
        let (x1, y1) = polygon[(i + 1) % polygon.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice.abs() / 2.0
}

/// Per-detection matching outcome, in processing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionFlag {
    /// Index into the input detection slice.
    pub det_index: usize,
    pub confidence: f64,
    pub tp: bool,
}

/// Matching result for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    pub flags: Vec<DetectionFlag>,
    pub unmatched_gt: usize,
}

/// Greedy confidence-ordered matching of one frame's detections against
/// its ground truth.
pub fn match_frame(dets: &[Detection], gts: &[Label], iou_threshold: f64) -> FrameMatch {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| {
        dets[j]
            .confidence
            .partial_cmp(&dets[i].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let di = dets[i].box3.center.norm();
                let dj = dets[j].box3.center.norm();
                di.partial_cmp(&dj).unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(i.cmp(&j))
    });

    let mut gt_taken = vec![false; gts.len()];
    let mut flags = Vec::with_capacity(dets.len());
    for &i in &order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_taken[g] {
                continue;
            }
            let iou = iou3d(&dets[i].box3, &gt.box3);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        let tp = match best {
            Some((g, iou)) if iou >= iou_threshold => {
                gt_taken[g] = true;
                true
            }
            _ => false,
        };
        flags.push(DetectionFlag {
            det_index: i,
            confidence: dets[i].confidence,
            tp,
        });
    }
    FrameMatch {
        flags,
        unmatched_gt: gt_taken.iter().filter(|t| !**t).count(),
    }
}

/// Average precision over globally confidence-sorted TP/FP flags.
///
/// `flags` need not be pre-sorted. With no detections, AP is 0 when ground
/// truth exists and 1 when both sides are empty; detections without any
/// ground truth are rejected.
pub fn average_precision(flags: &[(f64, bool)], total_gt: usize, mode: ApMode) -> Result<f64> {
    if flags.is_empty() {
        return Ok(if total_gt == 0 { 1.0 } else { 0.0 });
    }
    if total_gt == 0 {
        return Err(Error::InvalidInput(
            "AP is undefined for detections without any ground truth".into(),
        ));
    }
    let groups = pr_groups(flags, total_gt);
    Ok(match mode {
        ApMode::ExactAuc => {
            // Sum of envelope precision per recall increment; each TP
            // contributes env / total_gt of area.
            let mut gained = 0.0;
            for g in &groups {
                gained += g.tp_delta as f64 * g.envelope;
            }
            gained / total_gt as f64
        }
        ApMode::FortyPoint => {
            let mut sum = 0.0;
            for k in 1..=40 {
                let r = k as f64 / 40.0;
                // Envelope precision at the first group reaching recall r.
                let p = groups
                    .iter()
                    .find(|g| g.recall >= r)
                    .map_or(0.0, |g| g.envelope);
                sum += p;
            }
            sum / 40.0
        }
    })
}

struct PrGroup {
    recall: f64,
    envelope: f64,
    tp_delta: usize,
}

/// Precision/recall points at distinct-confidence boundaries with the
/// right-to-left precision envelope attached.
fn pr_groups(flags: &[(f64, bool)], total_gt: usize) -> Vec<PrGroup> {
    let mut sorted: Vec<(f64, bool)> = flags.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut groups: Vec<(f64, f64, usize)> = Vec::new(); // recall, precision, tp_delta
    let mut tp = 0usize;
    let mut prev_tp = 0usize;
    let mut seen = 0usize;
    for (i, (conf, is_tp)) in sorted.iter().enumerate() {
        seen += 1;
        if *is_tp {
            tp += 1;
        }
        let boundary = i + 1 == sorted.len() || sorted[i + 1].0 < *conf;
        if boundary {
            groups.push((
                tp as f64 / total_gt as f64,
                tp as f64 / seen as f64,
                tp - prev_tp,
            ));
            prev_tp = tp;
        }
    }
    let mut out: Vec<PrGroup> = groups
        .iter()
        .map(|&(recall, precision, tp_delta)| PrGroup {
            recall,
            envelope: precision,
            tp_delta,
        })
        .collect();
    let mut running = 0.0f64;
    for g in out.iter_mut().rev() {
        running = running.max(g.envelope);
        g.envelope = running;
    }
    out
}

/// Matches every frame, aggregates the flags globally, and computes AP in
/// both modes plus the cumulative PR curves. Ground-truth frames without
/// predictions contribute false negatives; predictions for unknown frames
/// are an error.
pub fn evaluate(
    predictions: &BTreeMap<u64, Vec<Detection>>,
    ground_truth: &BTreeMap<u64, Vec<Label>>,
    iou_threshold: f64,
) -> Result<EvalReport> {
    let unknown: Vec<u64> = predictions
        .keys()
        .filter(|id| !ground_truth.contains_key(id))
        .copied()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::FrameMismatch(format!(
            "predictions reference frame ids missing from ground truth: {unknown:?}"
        )));
    }

    let empty: Vec<Detection> = Vec::new();
    let mut flags: Vec<(f64, bool)> = Vec::new();
    let mut total_gt = 0usize;
    let mut unmatched_gt = 0usize;
    for (frame_id, gts) in ground_truth {
        let dets = predictions.get(frame_id).unwrap_or(&empty);
        for d in dets {
            d.validate()?;
        }
        total_gt += gts.len();
        let matched = match_frame(dets, gts, iou_threshold);
        unmatched_gt += matched.unmatched_gt;
        flags.extend(matched.flags.iter().map(|f| (f.confidence, f.tp)));
    }

    // Global confidence order; the stable sort keeps the per-frame order
    // deterministic for ties.
    flags.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let tp = flags.iter().filter(|f| f.1).count();
    let fp = flags.len() - tp;

    let mut precision = Vec::with_capacity(flags.len());
    let mut recall = Vec::with_capacity(flags.len());
    let mut running_tp = 0usize;
    for (i, (_, is_tp)) in flags.iter().enumerate() {
        if *is_tp {
            running_tp += 1;
        }
        precision.push(running_tp as f64 / (i + 1) as f64);
        recall.push(if total_gt == 0 {
            0.0
        } else {
            running_tp as f64 / total_gt as f64
        });
    }

    let (ap, ap_forty_point) = if flags.is_empty() && total_gt == 0 {
        (1.0, 1.0)
    } else if total_gt == 0 {
        return Err(Error::InvalidInput(
            "ground truth is empty but predictions exist".into(),
        ));
    } else {
        (
            average_precision(&flags, total_gt, ApMode::ExactAuc)?,
            average_precision(&flags, total_gt, ApMode::FortyPoint)?,
        )
    };

    Ok(EvalReport {
        ap,
        ap_forty_point,
        iou_threshold,
        tp,
        fp,
        fn_count: unmatched_gt,
        total_gt,
        precision,
        recall,
    })
}
