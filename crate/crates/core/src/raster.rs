//! Single-channel floating point image planes.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Row-major `f32` plane. Every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterF32 {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RasterF32 {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} samples for a {width}x{height} raster",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    // Crate-internal constructor for buffers already known to be valid.
    pub(crate) fn from_parts_unchecked(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Multiplies every sample by `k`. Fails if the result overflows.
    pub fn scaled(&self, k: f32) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|v| v * k).collect())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Copies the part of `bbox` that lies inside the frame.
    pub fn crop_patch(&self, bbox: &BoundingBox) -> Result<Self> {
        let c = bbox
            .clip(self.width, self.height)
            .ok_or(Error::EmptyIntersection(*bbox, self.width, self.height))?;
        let (x0, y0, w, h) = (c.x as usize, c.y as usize, c.w as usize, c.h as usize);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        Ok(Self::from_parts_unchecked(w, h, data))
    }

    /// Bilinear resample with pixel-center alignment. Sample coordinates are
    /// clamped to the source, so the output never leaves the input range.
    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Self> {
        if out_w == 0 || out_h == 0 {
            return Err(Error::InvalidDimensions {
                width: out_w,
                height: out_h,
            });
        }
        if (out_w, out_h) == self.dims() {
            return Ok(self.clone());
        }
        let xs = axis_taps(self.width, out_w);
        let ys = axis_taps(self.height, out_h);
        let mut data = Vec::with_capacity(out_w * out_h);
        for &(y0, y1, fy) in &ys {
            let r0 = self.row(y0);
            let r1 = self.row(y1);
            for &(x0, x1, fx) in &xs {
                let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
                let bot = r1[x0] + (r1[x1] - r1[x0]) * fx;
                let v = top + (bot - top) * fy;
                // Guard against rounding drifting a hair outside [min(a,b), max(a,b)].
                let lo = r0[x0].min(r0[x1]).min(r1[x0]).min(r1[x1]);
                let hi = r0[x0].max(r0[x1]).max(r1[x0]).max(r1[x1]);
                data.push(v.clamp(lo, hi));
            }
        }
        Ok(Self::from_parts_unchecked(out_w, out_h, data))
    }
}

fn axis_taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f32)> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

/// Per-pixel channel indices, same layout as [`RasterF32`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRaster {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl IndexRaster {
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<u16>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
}
