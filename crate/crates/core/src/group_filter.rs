//! In-group / out-of-group classification of face detections from the FM
//! texture under each box.
//!
//! Near faces carry their texture at low instantaneous frequency, far faces
//! at high. The baseline scorer maps a quantile `q` of `‖IF‖` over the patch
//! to `1 / (1 + (q / if_threshold)²)`. An external scorer (for example a
//! trained network) can supply scores through a [`ScoreTable`] instead.
//!
//! Patches are resampled to 100×100 but IF stays in source-frame
//! radians/pixel. Expressed per patch pixel, every face would normalize to
//! the same frequency and the distance cue would vanish.

use crate::demod::AmFmField;
use crate::detection::{Detection, DetectionKind, DetectionSet, GroupLabel};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::io::ScoreTable;
use crate::raster::RasterF32;

/// Side of the classifier input patch.
pub const PATCH_SIDE: usize = 100;

/// Default `if_threshold`, radians/pixel. Geometric mean of the median-IF
/// medians of near and far faces from [`calibrate_threshold`] on
/// `synth::face_scale_fixture(20, 20, CALIBRATION_SEED)`.
pub const DEFAULT_IF_THRESHOLD: f64 = 0.764;
pub const CALIBRATION_SEED: u64 = 2019;

/// FM content under one detection box.
#[derive(Debug, Clone, PartialEq)]
pub struct FmPatch {
    /// `cos φ`, in `[-1, 1]`.
    pub fm: RasterF32,
    /// `‖IF‖` in source-frame radians/pixel.
    pub if_mag: RasterF32,
    pub source_box: BoundingBox,
    pub source_frame: u64,
    resize_scale: f64,
}

impl FmPatch {
    /// Geometric mean of the per-axis source-to-patch size ratios: a box of
    /// 200×200 source pixels has scale 2.
    pub fn resize_scale(&self) -> f64 {
        self.resize_scale
    }

    /// `‖IF‖` per patch pixel (source units times [`resize_scale`](Self::resize_scale)).
    pub fn if_mag_patch_units(&self) -> RasterF32 {
        let s = self.resize_scale as f32;
        self.if_mag.map(|v| v * s).expect("finite scale keeps samples finite")
    }
}

/// Crops FM and `‖IF‖` under `bbox` (clipped to the frame) and resamples both
/// to [`PATCH_SIDE`]².
pub fn extract_fm_patch(field: &AmFmField, bbox: &BoundingBox, frame_index: u64) -> Result<FmPatch> {
    let fm = field.fm_cos.crop_patch(bbox)?;
    let (cw, ch) = fm.dims();
    let if_mag = field.if_magnitude().crop_patch(bbox)?;
    let scale = ((cw as f64 / PATCH_SIDE as f64) * (ch as f64 / PATCH_SIDE as f64)).sqrt();
    Ok(FmPatch {
        fm: fm.resize_bilinear(PATCH_SIDE, PATCH_SIDE)?,
        if_mag: if_mag.resize_bilinear(PATCH_SIDE, PATCH_SIDE)?,
        source_box: *bbox,
        source_frame: frame_index,
        resize_scale: scale,
    })
}

/// Where classifier scores come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Scorer {
    #[default]
    BaselineFrequency,
    /// Scores computed elsewhere, keyed by the detection's frame and box.
    External(ScoreTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFilterConfig {
    /// Radians/pixel, > 0.
    pub if_threshold: f64,
    /// In `(0, 1)`.
    pub decision_quantile: f64,
    pub scorer: Scorer,
    /// In `[0, 1]`; in-group iff score ≥ this.
    pub score_threshold: f64,
}

impl Default for GroupFilterConfig {
    fn default() -> Self {
        Self {
            if_threshold: DEFAULT_IF_THRESHOLD,
            decision_quantile: 0.5,
            scorer: Scorer::BaselineFrequency,
            score_threshold: 0.5,
        }
    }
}

impl GroupFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.if_threshold.is_finite() && self.if_threshold > 0.0) {
            return Err(Error::config("if_threshold", format!("must be a positive number, got {}", self.if_threshold)));
        }
        if !(self.decision_quantile > 0.0 && self.decision_quantile < 1.0) {
            return Err(Error::config("quantile", format!("must lie in (0, 1), got {}", self.decision_quantile)));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::config("score_threshold", format!("must lie in [0, 1], got {}", self.score_threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDecision {
    pub in_group: bool,
    pub score: f32,
}

/// Linear-interpolated quantile (the usual "type 7" definition).
pub fn quantile(values: &[f32], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v: Vec<f32> = values.to_vec();
    v.sort_by(f32::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    v[lo] as f64 * (1.0 - t) + v[hi] as f64 * t
}

/// `1 / (1 + (q / threshold)²)`: 0.5 at the threshold, strictly decreasing in `q`.
pub fn baseline_score(q: f64, if_threshold: f64) -> f64 {
    let r = q / if_threshold;
    1.0 / (1.0 + r * r)
}

pub fn classify_group(patch: &FmPatch, cfg: &GroupFilterConfig) -> Result<GroupDecision> {
    cfg.validate()?;
    let score = match &cfg.scorer {
        Scorer::BaselineFrequency => {
            let q = quantile(patch.if_mag.data(), cfg.decision_quantile);
            baseline_score(q, cfg.if_threshold) as f32
        }
        Scorer::External(table) => table.require(patch.source_frame, &patch.source_box)?,
    };
    Ok(GroupDecision {
        in_group: score as f64 >= cfg.score_threshold,
        score,
    })
}

/// Labels every face detection in or out of group. Back-of-head detections
/// pass through unchanged and nothing is removed.
///
/// `field_for` is called once per frame that holds a face, in ascending frame
/// order, and only when the baseline scorer needs the AM-FM field.
pub fn filter_detections<F>(dets: &DetectionSet, mut field_for: F, cfg: &GroupFilterConfig) -> Result<DetectionSet>
where
    F: FnMut(u64) -> Result<AmFmField>,
{
    cfg.validate()?;
    let mut out = Vec::with_capacity(dets.len());
    for (frame, run) in dets.frames() {
        let has_face = run.iter().any(|d| d.kind() == DetectionKind::Face);
        let field = match (&cfg.scorer, has_face) {
            (Scorer::BaselineFrequency, true) => Some(field_for(frame).map_err(|e| e.at_frame(frame))?),
            _ => None,
        };
        out.extend(label_frame(run, field.as_ref(), cfg)?);
    }
    Ok(DetectionSet::from_detections(dets.video_id.clone(), out))
}

/// [`filter_detections`] for the detections of a single frame. `field` may be
/// `None` only with an external scorer.
pub fn label_frame(run: &[Detection], field: Option<&AmFmField>, cfg: &GroupFilterConfig) -> Result<Vec<Detection>> {
    let mut out = Vec::with_capacity(run.len());
    for det in run {
        let mut det = det.clone();
        if det.kind() == DetectionKind::Face {
            let frame = det.frame_index;
            let decision = match (&cfg.scorer, field) {
                (Scorer::External(table), _) => {
                    let score = table.require(frame, &det.bbox)?;
                    GroupDecision {
                        in_group: score as f64 >= cfg.score_threshold,
                        score,
                    }
                }
                (Scorer::BaselineFrequency, Some(field)) => {
                    let patch = extract_fm_patch(field, &det.bbox, frame).map_err(|e| e.at_frame(frame))?;
                    classify_group(&patch, cfg)?
                }
                (Scorer::BaselineFrequency, None) => {
                    return Err(Error::config("scorer", "the baseline scorer needs an AM-FM field"));
                }
            };
            det.in_group = if decision.in_group { GroupLabel::InGroup } else { GroupLabel::OutOfGroup };
        }
        out.push(det);
    }
    Ok(out)
}

/// Threshold between two populations of per-face IF quantiles: the geometric
/// mean of their medians. Fails unless the near median is strictly below the
/// far one.
pub fn calibrate_threshold(near: &[f64], far: &[f64]) -> Result<f64> {
    if near.is_empty() || far.is_empty() {
        return Err(Error::config("calibration", "both populations must be non-empty"));
    }
    let med = |v: &[f64]| quantile(&v.iter().map(|&x| x as f32).collect::<Vec<_>>(), 0.5);
    let (n, f) = (med(near), med(far));
    if !(n > 0.0 && n < f) {
        return Err(Error::config("calibration", format!("near median {n} is not below far median {f}")));
    }
    Ok((n * f).sqrt())
}
