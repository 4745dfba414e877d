//! One-to-one IOU matching per frame and TP/FP/FN/F1 accounting per video.
//!
//! Matching starts greedy: candidate pairs with IOU ≥ `iou_min`, highest IOU
//! first. Greedy alone can miss matches (a det taking the one gt that a
//! neighbour needed), so augmenting paths then grow the matching to maximum
//! cardinality. Pairs picked by the greedy pass stay matched to some partner.
//!
//! Inputs are first sorted canonically by `(y, x, h, w)`, so the result does
//! not depend on input order.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::detection::DetectionSet;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::io::GroundTruth;

pub const DEFAULT_IOU_MIN: f64 = 0.6;

/// `2·tp / (2·tp + fp + fn)`, or 0 when all three are 0.
pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> f64 {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameMatch {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// `(det index, gt index)` into the caller's slices, sorted by det index.
    pub pairs: Vec<(usize, usize)>,
}

/// Exact IOU as a reduced fraction, compared without rounding.
#[derive(Debug, Clone, Copy)]
struct Overlap {
    inter: i64,
    union: i64,
}

impl Overlap {
    fn of(a: &BoundingBox, b: &BoundingBox) -> Self {
        let inter = a.intersection_area(b);
        Self {
            inter,
            union: a.area() + b.area() - inter,
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.inter as i128 * other.union as i128).cmp(&(other.inter as i128 * self.union as i128))
    }

    fn at_least(&self, t: f64) -> bool {
        self.union > 0 && self.inter as f64 / self.union as f64 >= t
    }
}

fn canonical_key(b: &BoundingBox) -> (i32, i32, u32, u32) {
    (b.y, b.x, b.h, b.w)
}

/// Matches detections `(box, score)` to ground-truth boxes on one frame.
pub fn match_frame(dets: &[(BoundingBox, f32)], gts: &[BoundingBox], iou_min: f64) -> Result<FrameMatch> {
    if !(iou_min > 0.0 && iou_min <= 1.0) {
        return Err(Error::config("iou_min", format!("must lie in (0, 1], got {iou_min}")));
    }
    let mut dorder: Vec<usize> = (0..dets.len()).collect();
    dorder.sort_by(|&a, &b| {
        canonical_key(&dets[a].0)
            .cmp(&canonical_key(&dets[b].0))
            .then(dets[b].1.total_cmp(&dets[a].1))
            .then(a.cmp(&b))
    });
    let mut gorder: Vec<usize> = (0..gts.len()).collect();
    gorder.sort_by(|&a, &b| canonical_key(&gts[a]).cmp(&canonical_key(&gts[b])).then(a.cmp(&b)));

    // Candidate pairs in canonical index space.
    let mut cand: Vec<(usize, usize, Overlap)> = Vec::new();
    for (di, &d) in dorder.iter().enumerate() {
        for (gi, &g) in gorder.iter().enumerate() {
            let o = Overlap::of(&dets[d].0, &gts[g]);
            if o.at_least(iou_min) {
                cand.push((di, gi, o));
            }
        }
    }
    cand.sort_by(|a, b| {
        b.2.cmp(&a.2)
            .then(dets[dorder[b.0]].1.total_cmp(&dets[dorder[a.0]].1))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let (nd, ng) = (dets.len(), gts.len());
    let mut det_to = vec![usize::MAX; nd];
    let mut gt_to = vec![usize::MAX; ng];
    for &(d, g, _) in &cand {
        if det_to[d] == usize::MAX && gt_to[g] == usize::MAX {
            det_to[d] = g;
            gt_to[g] = d;
        }
    }

    // Adjacency in preference order for the augmenting search.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nd];
    for &(d, g, _) in &cand {
        adj[d].push(g);
    }
    for d in 0..nd {
        if det_to[d] == usize::MAX {
            let mut visited = vec![false; ng];
            augment(d, &adj, &mut det_to, &mut gt_to, &mut visited);
        }
    }

    let mut pairs: Vec<(usize, usize)> = (0..nd)
        .filter(|&d| det_to[d] != usize::MAX)
        .map(|d| (dorder[d], gorder[det_to[d]]))
        .collect();
    pairs.sort_unstable();
    let tp = pairs.len() as u64;
    Ok(FrameMatch {
        tp,
        fp: nd as u64 - tp,
        fn_: ng as u64 - tp,
        pairs,
    })
}

/// Kuhn's augmenting path search from det `d`.
fn augment(d: usize, adj: &[Vec<usize>], det_to: &mut [usize], gt_to: &mut [usize], visited: &mut [bool]) -> bool {
    for &g in &adj[d] {
        if visited[g] {
            continue;
        }
        visited[g] = true;
        if gt_to[g] == usize::MAX || augment(gt_to[g], adj, det_to, gt_to, visited) {
            det_to[d] = g;
            gt_to[g] = d;
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub video_id: String,
    pub frames_evaluated: u64,
    pub labeled: u64,
    pub detected: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl EvalReport {
    pub fn from_counts(video_id: impl Into<String>, frames_evaluated: u64, tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self {
            video_id: video_id.into(),
            frames_evaluated,
            labeled: tp + fn_,
            detected: tp + fp,
            tp,
            fp,
            fn_,
            f1: f1_score(tp, fp, fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
        }
    }
}

/// Sums per-frame matches over the frames present in `gt`. Detections on
/// other frames are ignored.
pub fn evaluate_video(dets: &DetectionSet, gt: &GroundTruth, iou_min: f64) -> Result<EvalReport> {
    let all = dets.detections();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&frame, anns) in &gt.frames {
        let lo = all.partition_point(|d| d.frame_index < frame);
        let hi = all.partition_point(|d| d.frame_index <= frame);
        let boxes: Vec<(BoundingBox, f32)> = all[lo..hi].iter().map(|d| (d.bbox, d.score())).collect();
        let gts: Vec<BoundingBox> = anns.iter().map(|a| a.bbox).collect();
        let m = match_frame(&boxes, &gts, iou_min)?;
        tp += m.tp;
        fp += m.fp;
        fn_ += m.fn_;
    }
    Ok(EvalReport::from_counts(dets.video_id.clone(), gt.frames.len() as u64, tp, fp, fn_))
}

/// Plain-text table with one row per report.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7} {:>7} {:>7}",
        "video", "frames", "labeled", "detected", "TP", "FP", "FN", "prec", "recall", "F1"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7.4} {:>7.4} {:>7.4}",
            r.video_id, r.frames_evaluated, r.labeled, r.detected, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
        );
    }
    out
}
