use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionKind {
    Face,
    BackOfHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GroupLabel {
    #[default]
    Unclassified,
    InGroup,
    OutOfGroup,
}

/// One labeled box on one frame. The kind is fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: u64,
    pub bbox: BoundingBox,
    kind: DetectionKind,
    score: f32,
    pub in_group: GroupLabel,
}

impl Detection {
    pub fn new(frame_index: u64, bbox: BoundingBox, kind: DetectionKind, score: f32) -> Result<Self> {
        check_score(score)?;
        Ok(Self {
            frame_index,
            bbox,
            kind,
            score,
            in_group: GroupLabel::Unclassified,
        })
    }

    pub fn kind(&self) -> DetectionKind {
        self.kind
    }

    pub fn score(&self) -> f32 {
        self.score
    }

    pub fn set_score(&mut self, score: f32) -> Result<()> {
        check_score(score)?;
        self.score = score;
        Ok(())
    }

    pub fn with_group(mut self, label: GroupLabel) -> Self {
        self.in_group = label;
        self
    }
}

fn check_score(score: f32) -> Result<()> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::InvalidScore(score));
    }
    Ok(())
}

/// Detections of one video, ordered by frame and then by insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    pub video_id: String,
    detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn new(video_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            detections: Vec::new(),
        }
    }

    /// Stable sort by frame, so ties keep their input order.
    pub fn from_detections(video_id: impl Into<String>, mut detections: Vec<Detection>) -> Self {
        detections.sort_by_key(|d| d.frame_index);
        Self {
            video_id: video_id.into(),
            detections,
        }
    }

    pub fn push(&mut self, det: Detection) {
        // Keep the ordering invariant without re-sorting the common append-in-order case.
        let pos = self.detections.partition_point(|d| d.frame_index <= det.frame_index);
        self.detections.insert(pos, det);
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn into_detections(self) -> Vec<Detection> {
        self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Detection> {
        self.detections.iter()
    }

    /// Consecutive runs of detections sharing a frame index.
    pub fn frames(&self) -> impl Iterator<Item = (u64, &[Detection])> {
        self.detections
            .chunk_by(|a, b| a.frame_index == b.frame_index)
            .map(|run| (run[0].frame_index, run))
    }

    pub fn retain(&mut self, f: impl FnMut(&Detection) -> bool) {
        self.detections.retain(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: u64, x: i32) -> Detection {
        Detection::new(frame, BoundingBox::new(x, 0, 4, 4).unwrap(), DetectionKind::Face, 0.5).unwrap()
    }

    #[test]
    fn sorted_by_frame_with_stable_ties() {
        let set = DetectionSet::from_detections("v", vec![det(2, 0), det(1, 1), det(2, 2), det(1, 3)]);
        let xs: Vec<_> = set.iter().map(|d| (d.frame_index, d.bbox.x)).collect();
        assert_eq!(xs, vec![(1, 1), (1, 3), (2, 0), (2, 2)]);
    }

    #[test]
    fn push_keeps_order() {
        let mut set = DetectionSet::new("v");
        set.push(det(3, 0));
        set.push(det(1, 1));
        set.push(det(3, 2));
        set.push(det(2, 3));
        let xs: Vec<_> = set.iter().map(|d| (d.frame_index, d.bbox.x)).collect();
        assert_eq!(xs, vec![(1, 1), (2, 3), (3, 0), (3, 2)]);
    }

    #[test]
    fn score_domain() {
        let b = BoundingBox::new(0, 0, 1, 1).unwrap();
        assert!(Detection::new(0, b, DetectionKind::Face, 1.01).is_err());
        assert!(Detection::new(0, b, DetectionKind::Face, -0.1).is_err());
        assert!(Detection::new(0, b, DetectionKind::Face, f32::NAN).is_err());
        let d = Detection::new(0, b, DetectionKind::BackOfHead, 1.0).unwrap();
        assert_eq!(d.in_group, GroupLabel::Unclassified);
    }

    #[test]
    fn frame_runs() {
        let set = DetectionSet::from_detections("v", vec![det(0, 0), det(0, 1), det(5, 2)]);
        let runs: Vec<_> = set.frames().map(|(f, r)| (f, r.len())).collect();
        assert_eq!(runs, vec![(0, 2), (5, 1)]);
    }
}
