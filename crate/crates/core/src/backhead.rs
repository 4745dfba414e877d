//! Back-of-head candidates from AM-FM texture.
//!
//! Pixels with enough AM and `‖IF‖` inside a texture band form a mask, which
//! is closed with a 3×3 square, labeled 8-connected and filtered by area
//! (pixel count) and bounding-box aspect ratio.
//!
//! The AM cut is relative so decisions do not depend on frame brightness:
//! `max(min_am_median_factor · median AM, min_am_peak_fraction · max AM)`.
//! The peak term matters on flat-background frames, where the median AM is
//! nearly zero and a median-only cut would admit every filter skirt.

use crate::demod::AmFmField;
use crate::detection::{Detection, DetectionKind};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::group_filter::{quantile, GroupDecision, Scorer};

#[derive(Debug, Clone, PartialEq)]
pub struct BackHeadConfig {
    /// `(low, high)` band of `‖IF‖`, radians/pixel, inclusive.
    pub texture_if_band: (f64, f64),
    /// Multiple of the frame's median AM.
    pub min_am_median_factor: f64,
    /// Fraction of the frame's largest AM.
    pub min_am_peak_fraction: f64,
    /// Component pixel count bounds, inclusive.
    pub min_region_area: u64,
    pub max_region_area: u64,
    /// Bounds on bounding-box width / height, inclusive.
    pub aspect_bounds: (f64, f64),
    pub score_threshold: f64,
    pub scorer: Scorer,
}

impl Default for BackHeadConfig {
    fn default() -> Self {
        Self {
            texture_if_band: (0.6, 2.4),
            min_am_median_factor: 1.5,
            min_am_peak_fraction: 0.25,
            min_region_area: 900,
            max_region_area: 40_000,
            aspect_bounds: (0.5, 2.0),
            score_threshold: 0.5,
            scorer: Scorer::BaselineFrequency,
        }
    }
}

impl BackHeadConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.texture_if_band;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(Error::config("texture_if_band", format!("need 0 <= low < high, got ({lo}, {hi})")));
        }
        if !(self.min_am_median_factor >= 0.0 && self.min_am_median_factor.is_finite()) {
            return Err(Error::config("min_am", format!("must be >= 0, got {}", self.min_am_median_factor)));
        }
        if !(0.0..=1.0).contains(&self.min_am_peak_fraction) {
            return Err(Error::config("min_am_peak_fraction", format!("must lie in [0, 1], got {}", self.min_am_peak_fraction)));
        }
        if self.min_region_area >= self.max_region_area {
            return Err(Error::config(
                "min_region_area",
                format!("must be below max_region_area ({} >= {})", self.min_region_area, self.max_region_area),
            ));
        }
        let (amin, amax) = self.aspect_bounds;
        if !(amin > 0.0 && amin <= amax && amax.is_finite()) {
            return Err(Error::config("aspect_bounds", format!("need 0 < min <= max, got ({amin}, {amax})")));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::config("score_threshold", format!("must lie in [0, 1], got {}", self.score_threshold)));
        }
        Ok(())
    }

    fn in_band(&self, m: f32) -> bool {
        let m = m as f64;
        self.texture_if_band.0 <= m && m <= self.texture_if_band.1
    }
}

/// Absolute AM cut for `field` under `cfg`.
pub fn am_threshold(field: &AmFmField, cfg: &BackHeadConfig) -> f64 {
    let am = field.am.data();
    let peak = field.am.min_max().1 as f64;
    (cfg.min_am_median_factor * quantile(am, 0.5)).max(cfg.min_am_peak_fraction * peak)
}

/// Texture mask before morphology, row-major.
pub fn texture_mask(field: &AmFmField, cfg: &BackHeadConfig) -> Vec<bool> {
    let cut = am_threshold(field, cfg);
    let ifm = field.if_magnitude();
    field
        .am
        .data()
        .iter()
        .zip(ifm.data())
        .map(|(&a, &m)| a > 0.0 && a as f64 >= cut && cfg.in_band(m))
        .collect()
}

/// 3×3 closing. Out-of-frame pixels count as background for the dilation and
/// are ignored by the erosion, so the result always contains the input.
pub fn close3x3(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let pass = |src: &[bool], want: bool| -> Vec<bool> {
        let mut out = vec![!want; w * h];
        for y in 0..h {
            for x in 0..w {
                let hit = (y.saturating_sub(1)..(y + 2).min(h))
                    .any(|yy| (x.saturating_sub(1)..(x + 2).min(w)).any(|xx| src[yy * w + xx] == want));
                out[y * w + x] = if hit { want } else { !want };
            }
        }
        out
    };
    let dilated = pass(mask, true);
    // Erosion = complement of dilating the complement.
    pass(&dilated, false)
}

/// One 8-connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub bbox: BoundingBox,
    pub area: u64,
}

/// 8-connected components in raster-scan order of their first pixel.
pub fn label_components(mask: &[bool], w: usize, h: usize) -> Vec<Component> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        let mut area = 0u64;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            for yy in y.saturating_sub(1)..(y + 2).min(h) {
                for xx in x.saturating_sub(1)..(x + 2).min(w) {
                    let j = yy * w + xx;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Component {
            bbox: BoundingBox {
                x: x0 as i32,
                y: y0 as i32,
                w: (x1 - x0 + 1) as u32,
                h: (y1 - y0 + 1) as u32,
            },
            area,
        });
    }
    out
}

/// Candidate boxes, largest component first (ties by position).
pub fn candidate_regions(field: &AmFmField, cfg: &BackHeadConfig) -> Result<Vec<BoundingBox>> {
    cfg.validate()?;
    let (w, h) = field.dims();
    let mask = close3x3(&texture_mask(field, cfg), w, h);
    let mut comps: Vec<Component> = label_components(&mask, w, h)
        .into_iter()
        .filter(|c| (cfg.min_region_area..=cfg.max_region_area).contains(&c.area))
        .filter(|c| {
            let aspect = c.bbox.w as f64 / c.bbox.h as f64;
            cfg.aspect_bounds.0 <= aspect && aspect <= cfg.aspect_bounds.1
        })
        .collect();
    comps.sort_by(|a, b| b.area.cmp(&a.area).then((a.bbox.y, a.bbox.x).cmp(&(b.bbox.y, b.bbox.x))));
    Ok(comps.into_iter().map(|c| c.bbox).collect())
}

/// AM-weighted fraction of the box's pixels whose `‖IF‖` is in band.
pub fn texture_score(field: &AmFmField, bbox: &BoundingBox, cfg: &BackHeadConfig) -> Result<f64> {
    let am = field.am.crop_patch(bbox)?;
    let ifm = field.if_magnitude().crop_patch(bbox)?;
    let (mut inside, mut total) = (0.0f64, 0.0f64);
    for (&a, &m) in am.data().iter().zip(ifm.data()) {
        total += a as f64;
        if cfg.in_band(m) {
            inside += a as f64;
        }
    }
    Ok(if total > 0.0 { inside / total } else { 0.0 })
}

/// Accept/reject one candidate. `frame_index` keys the external score table.
pub fn classify_backhead(field: &AmFmField, bbox: &BoundingBox, frame_index: u64, cfg: &BackHeadConfig) -> Result<GroupDecision> {
    let score = match &cfg.scorer {
        Scorer::BaselineFrequency => texture_score(field, bbox, cfg)? as f32,
        Scorer::External(table) => table.require(frame_index, bbox)?,
    };
    Ok(GroupDecision {
        in_group: score as f64 >= cfg.score_threshold,
        score,
    })
}

/// Candidates of one frame that pass the classifier, as detections.
pub fn detect_backheads(field: &AmFmField, frame_index: u64, cfg: &BackHeadConfig) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for bbox in candidate_regions(field, cfg)? {
        let d = classify_backhead(field, &bbox, frame_index, cfg)?;
        if d.in_group {
            out.push(Detection::new(frame_index, bbox, DetectionKind::BackOfHead, d.score)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{IndexRaster, RasterF32};
    use proptest::prelude::*;

    fn field_from(am: Vec<f32>, ifm: Vec<f32>, w: usize, h: usize) -> AmFmField {
        AmFmField {
            am: RasterF32::new(w, h, am).unwrap(),
            fm_cos: RasterF32::filled(w, h, 0.0).unwrap(),
            if_u: RasterF32::new(w, h, ifm).unwrap(),
            if_v: RasterF32::filled(w, h, 0.0).unwrap(),
            dominant_channel: IndexRaster::from_parts(w, h, vec![0; w * h]),
        }
    }

    #[test]
    fn zero_field_has_no_candidates() {
        let f = field_from(vec![0.0; 64 * 64], vec![0.0; 64 * 64], 64, 64);
        assert!(candidate_regions(&f, &BackHeadConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn closing_bridges_single_gaps_and_is_extensive() {
        let (w, h) = (7, 3);
        let mut m = vec![false; w * h];
        for x in [0, 1, 2, 4, 5, 6] {
            m[w + x] = true;
        }
        let c = close3x3(&m, w, h);
        assert!(c[w + 3]);
        assert!(m.iter().zip(&c).all(|(a, b)| !a || *b));
        assert_eq!(label_components(&c, w, h).len(), 1);
    }

    #[test]
    fn diagonal_pixels_connect() {
        let m = vec![true, false, false, true];
        let comps = label_components(&m, 2, 2);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 2);
    }

    #[test]
    fn texture_score_examples() {
        let cfg = BackHeadConfig::default();
        let (w, h) = (20, 10);
        let b = BoundingBox::new(0, 0, 20, 10).unwrap();
        let all_in = field_from(vec![0.5; w * h], vec![1.0; w * h], w, h);
        assert_eq!(classify_backhead(&all_in, &b, 0, &cfg).unwrap(), GroupDecision { in_group: true, score: 1.0 });
        let all_out = field_from(vec![0.5; w * h], vec![3.0; w * h], w, h);
        assert_eq!(classify_backhead(&all_out, &b, 0, &cfg).unwrap(), GroupDecision { in_group: false, score: 0.0 });
        let half: Vec<f32> = (0..w * h).map(|i| if i % w < 10 { 1.0 } else { 0.1 }).collect();
        let f = field_from(vec![0.5; w * h], half, w, h);
        assert_eq!(classify_backhead(&f, &b, 0, &cfg).unwrap().score, 0.5);
    }

    #[test]
    fn bad_bounds_name_the_field() {
        let cfg = BackHeadConfig {
            min_region_area: 50_000,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field: "min_region_area", .. })));
        let cfg = BackHeadConfig {
            texture_if_band: (2.0, 1.0),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field: "texture_if_band", .. })));
    }

    /// Enlarging the band can merge two components, so the candidate count
    /// is not monotone in general.
    #[test]
    fn wider_band_can_merge_components() {
        let (w, h) = (100, 100);
        let mut ifm = vec![5.0f32; w * h];
        let mut am = vec![0.1f32; w * h];
        for y in 5..35 {
            for x in 5..95 {
                ifm[y * w + x] = if (45..55).contains(&x) { 2.6 } else { 1.0 };
                am[y * w + x] = 1.0;
            }
        }
        let f = field_from(am, ifm, w, h);
        let narrow = BackHeadConfig {
            min_region_area: 100,
            aspect_bounds: (0.1, 10.0),
            ..Default::default()
        };
        let wide = BackHeadConfig {
            texture_if_band: (0.6, 3.0),
            ..narrow.clone()
        };
        assert_eq!(candidate_regions(&f, &narrow).unwrap().len(), 2);
        assert_eq!(candidate_regions(&f, &wide).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn boxes_stay_inside_the_frame(seed in any::<u64>(), w in 8usize..40, h in 8usize..40) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let am: Vec<f32> = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
            let ifm: Vec<f32> = (0..w * h).map(|_| rng.gen_range(0.0..3.0)).collect();
            let f = field_from(am, ifm, w, h);
            let cfg = BackHeadConfig { min_region_area: 1, aspect_bounds: (0.01, 100.0), ..Default::default() };
            for b in candidate_regions(&f, &cfg).unwrap() {
                prop_assert_eq!(b.clip(w, h), Some(b));
            }
        }

        #[test]
        fn closing_contains_input(bits in prop::collection::vec(any::<bool>(), 12 * 9)) {
            let c = close3x3(&bits, 12, 9);
            prop_assert!(bits.iter().zip(&c).all(|(a, b)| !a || *b));
            prop_assert_eq!(close3x3(&c, 12, 9), c.clone());
        }

        #[test]
        fn component_areas_sum_to_mask(bits in prop::collection::vec(any::<bool>(), 10 * 10)) {
            let total: u64 = label_components(&bits, 10, 10).iter().map(|c| c.area).sum();
            prop_assert_eq!(total, bits.iter().filter(|&&b| b).count() as u64);
        }
    }
}
