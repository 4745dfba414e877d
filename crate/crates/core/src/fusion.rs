use crate::detection::{Detection, DetectionKind, DetectionSet, GroupLabel};
use crate::error::{Error, Result};
use crate::geometry::iou;

pub const DEFAULT_IOU_DEDUP: f64 = 0.5;

/// Concatenates in-group faces and accepted back-of-head detections per frame.
///
/// A back-of-head box is dropped when it overlaps any face on its frame with
/// IOU ≥ `iou_dedup`; faces always survive, and two boxes of the same kind are
/// never merged. Every output record is marked in-group. Within a frame,
/// faces come first, then back-of-head boxes, each in input order.
pub fn fuse(faces: &DetectionSet, backheads: &DetectionSet, iou_dedup: f64) -> Result<DetectionSet> {
    if faces.video_id != backheads.video_id {
        return Err(Error::VideoIdMismatch(faces.video_id.clone(), backheads.video_id.clone()));
    }
    if !(0.0..=1.0).contains(&iou_dedup) {
        return Err(Error::config("iou_dedup", format!("must lie in [0, 1], got {iou_dedup}")));
    }
    let mut out: Vec<Detection> = Vec::with_capacity(faces.len() + backheads.len());
    let face_dets = faces.detections();
    for d in face_dets {
        out.push(d.clone().with_group(GroupLabel::InGroup));
    }
    for b in backheads.iter() {
        let lo = face_dets.partition_point(|f| f.frame_index < b.frame_index);
        let hi = face_dets.partition_point(|f| f.frame_index <= b.frame_index);
        let shadowed = face_dets[lo..hi]
            .iter()
            .any(|f| f.kind() == DetectionKind::Face && iou(&f.bbox, &b.bbox) >= iou_dedup);
        if !shadowed {
            out.push(b.clone().with_group(GroupLabel::InGroup));
        }
    }
    Ok(DetectionSet::from_detections(faces.video_id.clone(), out))
}
