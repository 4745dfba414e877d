//! Decompose → group filter → back-of-head → fuse over a frame sequence.
//!
//! Each frame is decomposed once and its field shared by the face filter and
//! the back-of-head detector. Frames run in parallel when the `parallel`
//! feature is on; results are collected in frame order, so output does not
//! depend on the thread count.

use crate::backhead::{detect_backheads, BackHeadConfig};
use crate::demod::dca_decompose;
use crate::detection::{Detection, DetectionKind, DetectionSet, GroupLabel};
use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, FilterbankSpec};
use crate::fusion::{fuse, DEFAULT_IOU_DEDUP};
use crate::group_filter::{label_frame, GroupFilterConfig};
use crate::raster::RasterF32;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filterbank: FilterbankSpec,
    pub group: GroupFilterConfig,
    pub backhead: BackHeadConfig,
    pub iou_dedup: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filterbank: FilterbankSpec::default(),
            group: GroupFilterConfig::default(),
            backhead: BackHeadConfig::default(),
            iou_dedup: DEFAULT_IOU_DEDUP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Input faces with in/out labels.
    pub labeled_faces: DetectionSet,
    pub backheads: DetectionSet,
    /// In-group faces fused with back-of-head detections.
    pub fused: DetectionSet,
}

/// Runs the whole chain. All frames must share one size. Face detections on
/// frames not in `frames` are an error.
pub fn run_pipeline(frames: &[(u64, RasterF32)], faces: &DetectionSet, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.group.validate()?;
    cfg.backhead.validate()?;
    let Some((_, first)) = frames.first() else {
        if let Some(d) = faces.iter().next() {
            return Err(Error::MissingFrame(d.frame_index));
        }
        return Ok(PipelineOutput {
            labeled_faces: faces.clone(),
            backheads: DetectionSet::new(faces.video_id.clone()),
            fused: DetectionSet::new(faces.video_id.clone()),
        });
    };
    let (w, h) = first.dims();
    for (i, f) in frames {
        if f.dims() != (w, h) {
            return Err(Error::DimensionMismatch {
                context: format!("frame {i}"),
                expected: (w, h),
                found: f.dims(),
            });
        }
    }
    for (frame, _) in faces.frames() {
        if !frames.iter().any(|(i, _)| *i == frame) {
            return Err(Error::MissingFrame(frame));
        }
    }
    let bank = FilterBank::build(w, h, &cfg.filterbank)?;

    let per_frame = |(index, frame): &(u64, RasterF32)| -> Result<(Vec<Detection>, Vec<Detection>)> {
        let field = dca_decompose(frame, &bank).map_err(|e| e.at_frame(*index))?;
        let run: Vec<Detection> = faces.iter().filter(|d| d.frame_index == *index).cloned().collect();
        let labeled = label_frame(&run, Some(&field), &cfg.group)?;
        let heads = detect_backheads(&field, *index, &cfg.backhead).map_err(|e| e.at_frame(*index))?;
        Ok((labeled, heads))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        frames.par_iter().map(per_frame).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = frames.iter().map(per_frame).collect();

    let mut labeled = Vec::new();
    let mut heads = Vec::new();
    for r in results {
        let (l, b) = r?;
        labeled.extend(l);
        heads.extend(b);
    }
    // Faces on frames outside `frames` were rejected above, so every face is labeled.
    let labeled_faces = DetectionSet::from_detections(faces.video_id.clone(), labeled);
    let backheads = DetectionSet::from_detections(faces.video_id.clone(), heads);
    let in_group = in_group_faces(&labeled_faces);
    let fused = fuse(&in_group, &backheads, cfg.iou_dedup)?;
    Ok(PipelineOutput {
        labeled_faces,
        backheads,
        fused,
    })
}

/// Faces labeled in-group, the input [`fuse`] expects.
pub fn in_group_faces(set: &DetectionSet) -> DetectionSet {
    let mut out = set.clone();
    out.retain(|d| d.kind() == DetectionKind::Face && d.in_group == GroupLabel::InGroup);
    out
}
