use crate::eval::match_frame;
use crate::geometry::BoundingBox;
use crate::io::to_gray8;
use crate::raster::RasterF32;
use crate::error::Result;

pub const TP_COLOR: [u8; 3] = [0, 200, 0];
pub const FP_COLOR: [u8; 3] = [220, 0, 0];
pub const FN_COLOR: [u8; 3] = [230, 200, 0];
pub const LINE_WIDTH: i64 = 2;

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    /// Gray frame in `[0, 1]` replicated into three channels.
    pub fn from_gray(frame: &RasterF32) -> Self {
        let g = to_gray8(frame, 0.0, 1.0);
        let data = g.iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: frame.width(),
            height: frame.height(),
            data,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Draws a `LINE_WIDTH` outline inside `bbox`, clipped to the image.
    pub fn draw_box(&mut self, bbox: &BoundingBox, color: [u8; 3]) {
        let (x0, y0, x1, y1) = (bbox.x as i64, bbox.y as i64, bbox.right(), bbox.bottom());
        let (w, h) = (self.width as i64, self.height as i64);
        for y in y0.max(0)..y1.min(h) {
            for x in x0.max(0)..x1.min(w) {
                let edge = x - x0 < LINE_WIDTH || x1 - 1 - x < LINE_WIDTH || y - y0 < LINE_WIDTH || y1 - 1 - y < LINE_WIDTH;
                if edge {
                    let i = 3 * (y as usize * self.width + x as usize);
                    self.data[i..i + 3].copy_from_slice(&color);
                }
            }
        }
    }
}

/// Detections in green when matched, red otherwise, and missed ground truth
/// in yellow. Without ground truth every detection is drawn green.
pub fn render_overlay(
    frame: &RasterF32,
    dets: &[(BoundingBox, f32)],
    gts: Option<&[BoundingBox]>,
    iou_min: f64,
) -> Result<RgbImage> {
    let mut img = RgbImage::from_gray(frame);
    let Some(gts) = gts else {
        for (b, _) in dets {
            img.draw_box(b, TP_COLOR);
        }
        return Ok(img);
    };
    let m = match_frame(dets, gts, iou_min)?;
    let mut det_hit = vec![false; dets.len()];
    let mut gt_hit = vec![false; gts.len()];
    for &(d, g) in &m.pairs {
        det_hit[d] = true;
        gt_hit[g] = true;
    }
    for (g, b) in gts.iter().enumerate() {
        if !gt_hit[g] {
            img.draw_box(b, FN_COLOR);
        }
    }
    for (d, (b, _)) in dets.iter().enumerate() {
        img.draw_box(b, if det_hit[d] { TP_COLOR } else { FP_COLOR });
    }
    Ok(img)
}
