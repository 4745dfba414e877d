//! Integer pixel boxes.
//!
//! A box `(x, y, w, h)` covers the half-open pixel range `[x, x + w) × [y, y + h)`.
//! Boxes may extend past the frame; only [`BoundingBox::clip`] looks at frame bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidDimensions {
                width: w as usize,
                height: h as usize,
            });
        }
        Ok(Self { x, y, w, h })
    }

    #[inline]
    pub fn right(&self) -> i64 {
        self.x as i64 + self.w as i64
    }

    #[inline]
    pub fn bottom(&self) -> i64 {
        self.y as i64 + self.h as i64
    }

    #[inline]
    pub fn area(&self) -> i64 {
        self.w as i64 * self.h as i64
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let ix = (self.right().min(other.right()) - (self.x.max(other.x) as i64)).max(0);
        let iy = (self.bottom().min(other.bottom()) - (self.y.max(other.y) as i64)).max(0);
        ix * iy
    }

    /// Intersection with the frame rectangle `[0, width) × [0, height)`.
    pub fn clip(&self, width: usize, height: usize) -> Option<BoundingBox> {
        let x0 = (self.x as i64).max(0);
        let y0 = (self.y as i64).max(0);
        let x1 = self.right().min(width as i64);
        let y1 = self.bottom().min(height as i64);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(BoundingBox {
            x: x0 as i32,
            y: y0 as i32,
            w: (x1 - x0) as u32,
            h: (y1 - y0) as u32,
        })
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}x{})", self.x, self.y, self.w, self.h)
    }
}

/// Intersection over union on the unclipped extents. Exact integer areas.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}
