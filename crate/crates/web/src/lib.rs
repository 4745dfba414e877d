//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Three operations: decompose an RGBA image, score a face box for group
//! membership, and find back-of-head regions. The plain-Rust functions below
//! the bindings carry the logic so it can be tested natively.

use amfm_groupdet::backhead::{detect_backheads, BackHeadConfig};
use amfm_groupdet::demod::{dca_decompose, fm_image, AmFmField};
use amfm_groupdet::filterbank::{FilterBank, FilterbankSpec};
use amfm_groupdet::geometry::BoundingBox;
use amfm_groupdet::group_filter::{classify_group, extract_fm_patch, GroupFilterConfig, DEFAULT_IF_THRESHOLD};
use amfm_groupdet::io::{to_gray8, BT601};
use amfm_groupdet::raster::RasterF32;
use wasm_bindgen::prelude::*;

/// AM-FM field of one image, kept on the Rust side between calls.
#[wasm_bindgen]
pub struct Decomposition {
    field: AmFmField,
}

#[wasm_bindgen]
impl Decomposition {
    /// Decomposes canvas `ImageData` bytes (RGBA, row-major).
    #[wasm_bindgen(constructor)]
    pub fn new(rgba: &[u8], width: usize, height: usize) -> Result<Decomposition, JsError> {
        decompose(rgba, width, height).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.field.dims().0
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.field.dims().1
    }

    /// AM scaled to the frame's peak, as RGBA.
    pub fn am_rgba(&self) -> Vec<u8> {
        let (_, peak) = self.field.am.min_max();
        gray_to_rgba(&to_gray8(&self.field.am, 0.0, peak))
    }

    /// `cos φ` mapped to `[0, 255]`, as RGBA.
    pub fn fm_rgba(&self) -> Vec<u8> {
        gray_to_rgba(&to_gray8(&fm_image(&self.field), 0.0, 1.0))
    }

    /// Baseline group score of a face box; in group when ≥ 0.5.
    pub fn group_score(&self, x: i32, y: i32, w: u32, h: u32, if_threshold: Option<f64>) -> Result<f64, JsError> {
        group_score(&self.field, x, y, w, h, if_threshold).map_err(|e| JsError::new(&e))
    }

    /// Accepted back-of-head boxes as a flat `[x, y, w, h, ...]` array.
    pub fn backheads(&self) -> Result<Vec<i32>, JsError> {
        backheads(&self.field).map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen(js_name = defaultIfThreshold)]
pub fn default_if_threshold() -> f64 {
    DEFAULT_IF_THRESHOLD
}

pub fn rgba_to_luma(rgba: &[u8], width: usize, height: usize) -> Result<RasterF32, String> {
    if rgba.len() != width * height * 4 {
        return Err(format!("expected {} RGBA bytes for {width}x{height}, got {}", width * height * 4, rgba.len()));
    }
    let data = rgba
        .chunks_exact(4)
        .map(|p| (BT601[0] * p[0] as f32 + BT601[1] * p[1] as f32 + BT601[2] * p[2] as f32) / 255.0)
        .collect();
    RasterF32::new(width, height, data).map_err(|e| e.to_string())
}

pub fn decompose(rgba: &[u8], width: usize, height: usize) -> Result<Decomposition, String> {
    let frame = rgba_to_luma(rgba, width, height)?;
    let bank = FilterBank::build(width, height, &FilterbankSpec::default()).map_err(|e| e.to_string())?;
    let field = dca_decompose(&frame, &bank).map_err(|e| e.to_string())?;
    Ok(Decomposition { field })
}

pub fn group_score(field: &AmFmField, x: i32, y: i32, w: u32, h: u32, if_threshold: Option<f64>) -> Result<f64, String> {
    let bbox = BoundingBox::new(x, y, w, h).map_err(|e| e.to_string())?;
    let cfg = GroupFilterConfig {
        if_threshold: if_threshold.unwrap_or(DEFAULT_IF_THRESHOLD),
        ..GroupFilterConfig::default()
    };
    let patch = extract_fm_patch(field, &bbox, 0).map_err(|e| e.to_string())?;
    let d = classify_group(&patch, &cfg).map_err(|e| e.to_string())?;
    Ok(d.score as f64)
}

pub fn backheads(field: &AmFmField) -> Result<Vec<i32>, String> {
    let dets = detect_backheads(field, 0, &BackHeadConfig::default()).map_err(|e| e.to_string())?;
    Ok(dets.iter().flat_map(|d| [d.bbox.x, d.bbox.y, d.bbox.w as i32, d.bbox.h as i32]).collect())
}

fn gray_to_rgba(gray: &[u8]) -> Vec<u8> {
    gray.iter().flat_map(|&v| [v, v, v, 255]).collect()
}
