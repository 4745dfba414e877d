//! JSONL detection/annotation/score files and frame images.
//!
//! All JSONL files are UTF-8, one object per line, unknown keys ignored.
//! Blank lines are skipped.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{Detection, DetectionKind, DetectionSet, GroupLabel};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::RasterF32;

/// Wire form of one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: u64,
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub kind: String,
    #[serde(default = "one")]
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_group: Option<String>,
}

fn one() -> f64 {
    1.0
}

/// Wire form of one annotated student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame: u64,
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person_id: Option<String>,
}

/// Wire form of one externally computed classifier score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub frame: u64,
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub score: f64,
}

/// A validated annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub bbox: BoundingBox,
    pub person_id: Option<String>,
}

/// Ground-truth boxes grouped by frame, frames ascending. Only frames that
/// appear here are evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub frames: BTreeMap<u64, Vec<Annotation>>,
}

impl GroundTruth {
    pub fn push(&mut self, frame: u64, ann: Annotation) {
        self.frames.entry(frame).or_default().push(ann);
    }

    pub fn num_boxes(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }
}

/// Scores keyed by `(frame, box)` for the external-scorer mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    scores: HashMap<(u64, BoundingBox), f32>,
}

impl ScoreTable {
    pub fn insert(&mut self, frame: u64, bbox: BoundingBox, score: f32) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        self.scores.insert((frame, bbox), score);
        Ok(())
    }

    pub fn get(&self, frame: u64, bbox: &BoundingBox) -> Option<f32> {
        self.scores.get(&(frame, *bbox)).copied()
    }

    /// Like [`get`](Self::get) but reports the missing key.
    pub fn require(&self, frame: u64, bbox: &BoundingBox) -> Result<f32> {
        self.get(frame, bbox)
            .ok_or(Error::MissingExternalScore { frame, bbox: *bbox })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn to_box(x: i64, y: i64, w: i64, h: i64) -> std::result::Result<BoundingBox, String> {
    if w <= 0 || h <= 0 {
        return Err(format!("box width and height must be positive (w={w}, h={h})"));
    }
    let x = i32::try_from(x).map_err(|_| format!("x={x} out of range"))?;
    let y = i32::try_from(y).map_err(|_| format!("y={y} out of range"))?;
    let w = u32::try_from(w).map_err(|_| format!("w={w} out of range"))?;
    let h = u32::try_from(h).map_err(|_| format!("h={h} out of range"))?;
    Ok(BoundingBox { x, y, w, h })
}

fn check_score(score: f64) -> std::result::Result<f32, String> {
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0, 1]"));
    }
    Ok(score as f32)
}

/// Calls `f` with (line number, record) for every non-blank line.
fn for_each_record<T, R, F>(reader: R, source: &str, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
    F: FnMut(usize, T) -> std::result::Result<(), String>,
{
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: source.to_string(),
        line,
        reason,
    };
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        f(lineno, rec).map_err(|reason| parse_err(lineno, reason))?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

impl DetectionRecord {
    pub fn to_detection(&self) -> std::result::Result<Detection, String> {
        let bbox = to_box(self.x, self.y, self.w, self.h)?;
        let kind = match self.kind.as_str() {
            "face" => DetectionKind::Face,
            "backhead" => DetectionKind::BackOfHead,
            other => return Err(format!("unknown kind {other:?} (expected \"face\" or \"backhead\")")),
        };
        let score = check_score(self.score)?;
        let label = match self.in_group.as_deref() {
            None => GroupLabel::Unclassified,
            Some("in") => GroupLabel::InGroup,
            Some("out") => GroupLabel::OutOfGroup,
            Some(other) => return Err(format!("unknown in_group {other:?} (expected \"in\" or \"out\")")),
        };
        let det = Detection::new(self.frame, bbox, kind, score).map_err(|e| e.to_string())?;
        Ok(det.with_group(label))
    }

    pub fn from_detection(d: &Detection) -> Self {
        Self {
            frame: d.frame_index,
            x: d.bbox.x as i64,
            y: d.bbox.y as i64,
            w: d.bbox.w as i64,
            h: d.bbox.h as i64,
            kind: match d.kind() {
                DetectionKind::Face => "face",
                DetectionKind::BackOfHead => "backhead",
            }
            .to_string(),
            score: d.score() as f64,
            in_group: match d.in_group {
                GroupLabel::Unclassified => None,
                GroupLabel::InGroup => Some("in".into()),
                GroupLabel::OutOfGroup => Some("out".into()),
            },
        }
    }
}

pub fn parse_detections(reader: impl Read, source: &str, video_id: &str) -> Result<DetectionSet> {
    let mut dets = Vec::new();
    for_each_record(reader, source, |_, rec: DetectionRecord| {
        dets.push(rec.to_detection()?);
        Ok(())
    })?;
    Ok(DetectionSet::from_detections(video_id, dets))
}

pub fn read_detections(path: impl AsRef<Path>, video_id: &str) -> Result<DetectionSet> {
    let path = path.as_ref();
    parse_detections(open(path)?, &path.display().to_string(), video_id)
}

pub fn detections_to_jsonl(set: &DetectionSet) -> String {
    let mut out = String::new();
    for d in set.iter() {
        out.push_str(&serde_json::to_string(&DetectionRecord::from_detection(d)).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_ground_truth(reader: impl Read, source: &str) -> Result<GroundTruth> {
    let mut gt = GroundTruth::default();
    for_each_record(reader, source, |_, rec: GroundTruthRecord| {
        let bbox = to_box(rec.x, rec.y, rec.w, rec.h)?;
        gt.push(
            rec.frame,
            Annotation {
                bbox,
                person_id: rec.person_id,
            },
        );
        Ok(())
    })?;
    Ok(gt)
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    parse_ground_truth(open(path)?, &path.display().to_string())
}

pub fn ground_truth_to_jsonl(gt: &GroundTruth) -> String {
    let mut out = String::new();
    for (&frame, anns) in &gt.frames {
        for a in anns {
            let rec = GroundTruthRecord {
                frame,
                x: a.bbox.x as i64,
                y: a.bbox.y as i64,
                w: a.bbox.w as i64,
                h: a.bbox.h as i64,
                person_id: a.person_id.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
            out.push('\n');
        }
    }
    out
}

pub fn parse_scores(reader: impl Read, source: &str) -> Result<ScoreTable> {
    let mut table = ScoreTable::default();
    for_each_record(reader, source, |_, rec: ScoreRecord| {
        let bbox = to_box(rec.x, rec.y, rec.w, rec.h)?;
        let score = check_score(rec.score)?;
        table.insert(rec.frame, bbox, score).map_err(|e| e.to_string())
    })?;
    Ok(table)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    parse_scores(open(path)?, &path.display().to_string())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
#[cfg(feature = "fs")]
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(feature = "fs")]
pub fn write_detections(path: impl AsRef<Path>, set: &DetectionSet) -> Result<()> {
    write_atomic(path, detections_to_jsonl(set).as_bytes())
}

/// Frame index encoded in a file name: the trailing run of digits of the stem
/// (`000.png` → 0, `frame_0012.pgm` → 12).
pub fn frame_index_from_name(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits_start = stem.rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
    stem[digits_start..].parse().ok()
}

fn is_frame_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "pgm")
    )
}

/// Numerically ordered frame files from a directory, or from a text file
/// listing one image path per line (relative paths resolve against the list's
/// directory).
pub fn list_frames(dir_or_list: impl AsRef<Path>) -> Result<Vec<(u64, PathBuf)>> {
    let root = dir_or_list.as_ref();
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    let candidates: Vec<PathBuf> = if meta.is_dir() {
        let mut v = Vec::new();
        for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let p = entry.map_err(|e| Error::io(root, e))?.path();
            if p.is_file() && is_frame_image(&p) {
                v.push(p);
            }
        }
        v
    } else {
        let text = fs::read_to_string(root).map_err(|e| Error::io(root, e))?;
        let base = root.parent().unwrap_or(Path::new("."));
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| base.join(l))
            .collect()
    };
    let mut frames = Vec::with_capacity(candidates.len());
    for p in candidates {
        let idx = frame_index_from_name(&p).ok_or_else(|| Error::UnreadableImage {
            path: p.clone(),
            reason: "file name carries no frame number".into(),
        })?;
        frames.push((idx, p));
    }
    frames.sort();
    if let Some(w) = frames.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::UnreadableImage {
            path: w[1].1.clone(),
            reason: format!("duplicate frame index {} (also {})", w[0].0, w[0].1.display()),
        });
    }
    Ok(frames)
}

pub const BT601: [f32; 3] = [0.299, 0.587, 0.114];

/// Loads one frame as the luma plane in `[0, 1]`. Gray images are used as is;
/// color images are reduced with BT.601 weights.
#[cfg(feature = "fs")]
pub fn read_frame(path: impl AsRef<Path>) -> Result<RasterF32> {
    use image::DynamicImage;
    let path = path.as_ref();
    let unreadable = |reason: String| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?
        .decode()
        .map_err(|e| unreadable(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => {
            img.to_luma32f().into_raw()
        }
        _ => img
            .to_rgb32f()
            .as_raw()
            .chunks_exact(3)
            .map(|p| (BT601[0] * p[0] + BT601[1] * p[1] + BT601[2] * p[2]).clamp(0.0, 1.0))
            .collect(),
    };
    RasterF32::new(w, h, data).map_err(|e| unreadable(e.to_string()))
}

/// Iterator over `(frame_index, luma)` in ascending frame order. All frames
/// must share the first frame's dimensions.
#[cfg(feature = "fs")]
pub struct FrameSequence {
    frames: std::vec::IntoIter<(u64, PathBuf)>,
    dims: Option<(usize, usize)>,
}

#[cfg(feature = "fs")]
impl FrameSequence {
    pub fn open(dir_or_list: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            frames: list_frames(dir_or_list)?.into_iter(),
            dims: None,
        })
    }

    pub fn remaining(&self) -> usize {
        self.frames.len()
    }
}

#[cfg(feature = "fs")]
impl Iterator for FrameSequence {
    type Item = Result<(u64, RasterF32)>;

    fn next(&mut self) -> Option<Self::Item> {
        let (idx, path) = self.frames.next()?;
        Some(read_frame(&path).and_then(|r| match self.dims {
            Some(d) if d != r.dims() => Err(Error::DimensionMismatch {
                context: path.display().to_string(),
                expected: d,
                found: r.dims(),
            }),
            _ => {
                self.dims = Some(r.dims());
                Ok((idx, r))
            }
        }))
    }
}

#[cfg(feature = "fs")]
pub fn read_frame_sequence(dir_or_list: impl AsRef<Path>) -> Result<FrameSequence> {
    FrameSequence::open(dir_or_list)
}

/// Quantizes `[lo, hi]` linearly to 8 bits.
pub fn to_gray8(r: &RasterF32, lo: f32, hi: f32) -> Vec<u8> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    r.data()
        .iter()
        .map(|&v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

#[cfg(feature = "fs")]
pub fn encode_png_gray(r: &RasterF32, lo: f32, hi: f32) -> Result<Vec<u8>> {
    encode_png(&to_gray8(r, lo, hi), r.width(), r.height(), image::ExtendedColorType::L8)
}

#[cfg(feature = "fs")]
pub fn encode_png_rgb(rgb: &[u8], width: usize, height: usize) -> Result<Vec<u8>> {
    encode_png(rgb, width, height, image::ExtendedColorType::Rgb8)
}

#[cfg(feature = "fs")]
fn encode_png(buf: &[u8], width: usize, height: usize, color: image::ExtendedColorType) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(buf, width as u32, height as u32, color)
        .map_err(|e| Error::InvalidRaster(e.to_string()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<DetectionSet> {
        parse_detections(text.as_bytes(), "mem", "v")
    }

    #[test]
    fn empty_input() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("\n\n").unwrap().is_empty());
    }

    #[test]
    fn one_face() {
        let set = parse(r#"{"frame":0,"x":10,"y":20,"w":30,"h":40,"kind":"face","score":0.9}"#).unwrap();
        assert_eq!(set.len(), 1);
        let d = &set.detections()[0];
        assert_eq!(d.kind(), DetectionKind::Face);
        assert_eq!(d.bbox, BoundingBox::new(10, 20, 30, 40).unwrap());
        assert_eq!(d.score(), 0.9);
        assert_eq!(d.in_group, GroupLabel::Unclassified);
    }

    #[test]
    fn defaults_and_unknown_keys() {
        let set = parse(r#"{"frame":3,"x":-1,"y":2,"w":3,"h":4,"kind":"backhead","extra":[1,2]}"#).unwrap();
        assert_eq!(set.detections()[0].score(), 1.0);
        assert_eq!(set.detections()[0].kind(), DetectionKind::BackOfHead);
    }

    #[test]
    fn invariant_violations_name_the_line() {
        let text = "{\"frame\":0,\"x\":0,\"y\":0,\"w\":5,\"h\":5,\"kind\":\"face\"}\n{\"frame\":0,\"x\":0,\"y\":0,\"w\":0,\"h\":5,\"kind\":\"face\"}\n";
        match parse(text) {
            Err(Error::Parse { line, reason, .. }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("w=0"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        for bad in [
            r#"{"frame":0,"x":0,"y":0,"w":5,"h":5,"kind":"face","score":1.5}"#,
            r#"{"frame":0,"x":0,"y":0,"w":5,"h":5,"kind":"hand"}"#,
            r#"{"frame":0,"x":0,"y":0,"w":5,"h":5,"kind":"face","in_group":"maybe"}"#,
            r#"{"frame":0,"x":0,"y":0,"w":5,"kind":"face"}"#,
            "not json",
        ] {
            assert!(matches!(parse(bad), Err(Error::Parse { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn ground_truth_grouping() {
        let text = r#"{"frame":5,"x":0,"y":0,"w":4,"h":4,"person_id":"s1"}
{"frame":1,"x":-3,"y":0,"w":4,"h":4}
{"frame":5,"x":0,"y":0,"w":4,"h":4}
"#;
        let gt = parse_ground_truth(text.as_bytes(), "mem").unwrap();
        assert_eq!(gt.frames.keys().copied().collect::<Vec<_>>(), vec![1, 5]);
        assert_eq!(gt.frames[&5].len(), 2);
        assert_eq!(gt.frames[&5][0].person_id.as_deref(), Some("s1"));
        assert_eq!(gt.frames[&1][0].bbox.x, -3);
        assert_eq!(parse_ground_truth(ground_truth_to_jsonl(&gt).as_bytes(), "mem").unwrap(), gt);
    }

    #[test]
    fn score_table_lookup() {
        let text = r#"{"frame":2,"x":1,"y":2,"w":3,"h":4,"score":0.25}"#;
        let t = parse_scores(text.as_bytes(), "mem").unwrap();
        let b = BoundingBox::new(1, 2, 3, 4).unwrap();
        assert_eq!(t.get(2, &b), Some(0.25));
        assert!(matches!(t.require(3, &b), Err(Error::MissingExternalScore { frame: 3, .. })));
        assert!(parse_scores(r#"{"frame":2,"x":1,"y":2,"w":3,"h":4,"score":2}"#.as_bytes(), "mem").is_err());
    }

    #[test]
    fn frame_names() {
        let idx = |s: &str| frame_index_from_name(Path::new(s));
        assert_eq!(idx("000.png"), Some(0));
        assert_eq!(idx("010.png"), Some(10));
        assert_eq!(idx("frame_0012.pgm"), Some(12));
        assert_eq!(idx("cover.png"), None);
    }

    fn arb_record() -> impl Strategy<Value = DetectionRecord> {
        (
            0u64..6,
            -50i64..50,
            -50i64..50,
            1i64..40,
            1i64..40,
            prop::bool::ANY,
            0u32..=100,
            prop::option::of(prop::bool::ANY),
        )
            .prop_map(|(frame, x, y, w, h, face, s, g)| DetectionRecord {
                frame,
                x,
                y,
                w,
                h,
                kind: if face { "face" } else { "backhead" }.into(),
                score: s as f64 / 100.0,
                in_group: g.map(|b| if b { "in" } else { "out" }.into()),
            })
    }

    fn to_text(recs: &[DetectionRecord]) -> String {
        recs.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
    }

    proptest! {
        #[test]
        fn write_read_fixpoint(recs in prop::collection::vec(arb_record(), 0..20)) {
            let first = parse(&to_text(&recs)).unwrap();
            let second = parse(&detections_to_jsonl(&first)).unwrap();
            prop_assert_eq!(&second, &first);
            prop_assert_eq!(detections_to_jsonl(&second), detections_to_jsonl(&first));
        }

        #[test]
        fn line_order_only_matters_within_a_frame(recs in prop::collection::vec(arb_record(), 0..20), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            // Give every record a distinct frame so the within-frame tie order is moot.
            let recs: Vec<_> = recs.into_iter().enumerate().map(|(i, mut r)| { r.frame = (i as u64 * 7919) % 101; r }).collect();
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(parse(&to_text(&recs)).unwrap(), parse(&to_text(&shuffled)).unwrap());
        }
    }

    #[cfg(feature = "fs")]
    mod files {
        use super::*;

        fn save(dir: &Path, name: &str, img: image::DynamicImage) {
            img.save(dir.join(name)).unwrap();
        }

        #[test]
        fn numeric_order_and_luma() {
            let dir = tempfile::tempdir().unwrap();
            save(dir.path(), "010.png", image::DynamicImage::ImageRgb8(image::RgbImage::from_pixel(20, 20, image::Rgb([255, 0, 0]))));
            save(dir.path(), "001.png", image::DynamicImage::ImageRgb8(image::RgbImage::from_pixel(20, 20, image::Rgb([255, 255, 255]))));
            save(dir.path(), "000.pgm", image::DynamicImage::ImageLuma8(image::GrayImage::from_pixel(20, 20, image::Luma([51]))));
            fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
            let frames: Vec<_> = read_frame_sequence(dir.path()).unwrap().collect::<Result<_>>().unwrap();
            assert_eq!(frames.iter().map(|f| f.0).collect::<Vec<_>>(), vec![0, 1, 10]);
            assert!(frames[0].1.data().iter().all(|&v| (v - 0.2).abs() < 1e-6));
            assert!(frames[1].1.data().iter().all(|&v| (v - 1.0).abs() < 1e-6));
            assert!(frames[2].1.data().iter().all(|&v| (v - 0.299).abs() < 1e-6));
        }

        #[test]
        fn mismatched_dimensions_name_the_file() {
            let dir = tempfile::tempdir().unwrap();
            save(dir.path(), "0.png", image::DynamicImage::ImageLuma8(image::GrayImage::new(20, 20)));
            save(dir.path(), "1.png", image::DynamicImage::ImageLuma8(image::GrayImage::new(21, 20)));
            let err = read_frame_sequence(dir.path()).unwrap().collect::<Result<Vec<_>>>().unwrap_err();
            assert!(matches!(&err, Error::DimensionMismatch { context, .. } if context.ends_with("1.png")));
        }

        #[test]
        fn garbage_image_is_unreadable() {
            let dir = tempfile::tempdir().unwrap();
            fs::write(dir.path().join("3.png"), b"not a png").unwrap();
            let err = read_frame_sequence(dir.path()).unwrap().next().unwrap().unwrap_err();
            assert!(matches!(&err, Error::UnreadableImage { path, .. } if path.ends_with("3.png")));
        }

        #[test]
        fn list_file_input() {
            let dir = tempfile::tempdir().unwrap();
            save(dir.path(), "7.png", image::DynamicImage::ImageLuma8(image::GrayImage::new(16, 16)));
            save(dir.path(), "2.png", image::DynamicImage::ImageLuma8(image::GrayImage::new(16, 16)));
            fs::write(dir.path().join("list.txt"), "7.png\n2.png\n").unwrap();
            let frames = list_frames(dir.path().join("list.txt")).unwrap();
            assert_eq!(frames.iter().map(|f| f.0).collect::<Vec<_>>(), vec![2, 7]);
        }

        #[test]
        fn atomic_write_replaces() {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("out.jsonl");
            write_atomic(&p, b"a").unwrap();
            write_atomic(&p, b"bb").unwrap();
            assert_eq!(fs::read(&p).unwrap(), b"bb");
            assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        }
    }
}
