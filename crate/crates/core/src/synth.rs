//! Synthetic frames and fixtures with known ground truth.
//!
//! Everything here is seeded and deterministic. Frequencies are in cycles/pixel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detection::{Detection, DetectionKind, DetectionSet};
use crate::error::Result;
use crate::geometry::BoundingBox;
use crate::io::{Annotation, GroundTruth};
use crate::raster::RasterF32;

const TAU: f64 = 2.0 * PI;

/// `a · cos(2π(u·x + v·y) + phase)`.
pub fn plane_wave(width: usize, height: usize, a: f64, u: f64, v: f64, phase: f64) -> Result<RasterF32> {
    RasterF32::from_fn(width, height, |x, y| (a * (TAU * (u * x as f64 + v * y as f64) + phase).cos()) as f32)
}

/// Horizontal linear chirp whose local frequency rises from `f0` at `x = 0`
/// to `f1` at `x = width - 1`, constant along `y`.
pub fn chirp(width: usize, height: usize, a: f64, f0: f64, f1: f64) -> Result<RasterF32> {
    let rate = (f1 - f0) / (width.max(2) - 1) as f64;
    RasterF32::from_fn(width, height, |x, _| {
        let x = x as f64;
        (a * (TAU * (f0 * x + 0.5 * rate * x * x)).cos()) as f32
    })
}

/// Keeps every `factor`-th sample along both axes.
pub fn decimate(img: &RasterF32, factor: usize) -> Result<RasterF32> {
    let factor = factor.max(1);
    let (w, h) = img.dims();
    RasterF32::from_fn(w.div_ceil(factor), h.div_ceil(factor), |x, y| img.get(x * factor, y * factor))
}

/// Face-like texture defined on the unit square, so the same pattern can be
/// rendered at any size. Its carrier runs at about `CYCLES_PER_FACE` cycles
/// per face width; rendering at `s` pixels puts it at `CYCLES_PER_FACE / s`
/// cycles/pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceTexture {
    phase_a: f64,
    phase_b: f64,
    contrast: f64,
}

pub const CYCLES_PER_FACE: f64 = 6.0;

impl FaceTexture {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            phase_a: rng.gen_range(0.0..TAU),
            phase_b: rng.gen_range(0.0..TAU),
            contrast: rng.gen_range(0.25..0.35),
        }
    }

    /// Value at face coordinates `(s, t) ∈ [0, 1]²`, zero outside the oval.
    pub fn sample(&self, s: f64, t: f64) -> f64 {
        let env = oval(s, t);
        if env == 0.0 {
            return 0.0;
        }
        let c = CYCLES_PER_FACE;
        let a = (TAU * (c * s + 0.25 * c * t) + self.phase_a).cos();
        let b = (TAU * (-0.3 * c * s + 0.9 * c * t) + self.phase_b).cos();
        self.contrast * env * (0.7 * a + 0.3 * b)
    }
}

/// Smooth elliptical mask filling the unit square, raised-cosine rim.
fn oval(s: f64, t: f64) -> f64 {
    let r = ((2.0 * s - 1.0).powi(2) + (2.0 * t - 1.0).powi(2)).sqrt();
    if r >= 1.0 {
        0.0
    } else if r <= 0.8 {
        1.0
    } else {
        0.5 * (1.0 + (PI * (r - 0.8) / 0.2).cos())
    }
}

/// Mutable frame under construction.
#[derive(Debug, Clone)]
pub struct Canvas {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: f64) -> Self {
        Self {
            width,
            height,
            data: vec![background; width * height],
        }
    }

    /// Adds uniform noise in `[-amplitude, amplitude]`.
    pub fn add_noise(&mut self, amplitude: f64, rng: &mut impl Rng) {
        for v in &mut self.data {
            *v += rng.gen_range(-amplitude..=amplitude);
        }
    }

    /// Adds `texture` stretched over `bbox`, sampled at pixel centers.
    pub fn add_face(&mut self, bbox: &BoundingBox, texture: &FaceTexture) {
        self.add_over(bbox, |s, t| texture.sample(s, t));
    }

    /// Adds a disk of radius `r` centered in `bbox`'s square, filled with a
    /// two-direction texture at `freq` cycles/pixel and amplitude `a`.
    pub fn add_textured_disk(&mut self, cx: f64, cy: f64, r: f64, freq: f64, a: f64, phase: f64) {
        let (x0, x1) = ((cx - r).floor().max(0.0) as usize, ((cx + r).ceil() as usize).min(self.width));
        let (y0, y1) = ((cy - r).floor().max(0.0) as usize, ((cy + r).ceil() as usize).min(self.height));
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let (xf, yf) = (x as f64, y as f64);
                let v = 0.75 * (TAU * freq * (0.8 * xf + 0.6 * yf) + phase).cos()
                    + 0.25 * (TAU * freq * (-0.6 * xf + 0.8 * yf) + 1.3 * phase).cos();
                self.data[y * self.width + x] += a * v;
            }
        }
    }

    fn add_over(&mut self, bbox: &BoundingBox, f: impl Fn(f64, f64) -> f64) {
        let Some(clip) = bbox.clip(self.width, self.height) else {
            return;
        };
        for y in clip.y..clip.bottom() as i32 {
            for x in clip.x..clip.right() as i32 {
                let s = (x - bbox.x) as f64 + 0.5;
                let t = (y - bbox.y) as f64 + 0.5;
                self.data[y as usize * self.width + x as usize] += f(s / bbox.w as f64, t / bbox.h as f64);
            }
        }
    }

    /// Freezes into a raster clamped to `[0, 1]`.
    pub fn finish(self) -> Result<RasterF32> {
        RasterF32::new(self.width, self.height, self.data.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect())
    }
}

/// Side of a near face in the fixtures.
pub const NEAR_FACE: u32 = 100;
/// Distance factor between near and far faces.
pub const FAR_SCALE: u32 = 4;
/// Texture frequency of back-of-head disks, inside the default texture band.
pub const DISK_FREQ: f64 = 0.2;
pub const DISK_RADIUS: f64 = 40.0;

/// One rendered frame of the group-separation fixture with its face boxes
/// and whether each is near (in-group).
#[derive(Debug, Clone)]
pub struct FaceFrame {
    pub frame: RasterF32,
    pub faces: Vec<(BoundingBox, bool)>,
}

/// Renders `near + far` faces of one shared texture, near ones at
/// [`NEAR_FACE`] pixels and far ones [`FAR_SCALE`] times smaller, two near and
/// four far per 320×240 frame.
pub fn face_scale_fixture(near: usize, far: usize, seed: u64) -> Result<Vec<FaceFrame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture = FaceTexture::random(&mut rng);
    let far_side = NEAR_FACE / FAR_SCALE;
    let (mut near_left, mut far_left) = (near, far);
    let mut frames = Vec::new();
    while near_left + far_left > 0 {
        let mut canvas = Canvas::new(320, 240, 0.5);
        canvas.add_noise(0.01, &mut rng);
        let mut faces = Vec::new();
        for slot in 0..2 {
            if near_left == 0 {
                break;
            }
            let x = 20 + 160 * slot + rng.gen_range(0..20);
            let b = BoundingBox::new(x, 120 + rng.gen_range(0..12), NEAR_FACE, NEAR_FACE)?;
            canvas.add_face(&b, &texture);
            faces.push((b, true));
            near_left -= 1;
        }
        for slot in 0..4 {
            if far_left == 0 {
                break;
            }
            let x = 20 + 75 * slot + rng.gen_range(0..20);
            let b = BoundingBox::new(x, 20 + rng.gen_range(0..40), far_side, far_side)?;
            canvas.add_face(&b, &texture);
            faces.push((b, false));
            far_left -= 1;
        }
        frames.push(FaceFrame {
            frame: canvas.finish()?,
            faces,
        });
    }
    Ok(frames)
}

/// A short video with near faces, far faces and back-of-head disks.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub frames: Vec<(u64, RasterF32)>,
    /// What an upstream face detector reports: every near and far face.
    pub face_detections: DetectionSet,
    /// In-group students only: near faces and back-of-head disks.
    pub ground_truth: GroundTruth,
}

pub const VIDEO_WIDTH: usize = 448;
pub const VIDEO_HEIGHT: usize = 288;

/// Each frame holds two near faces and two back-of-head disks (the group)
/// plus three far faces (another group in the background). Objects drift a
/// few pixels between frames and face boxes carry detector jitter.
pub fn synthetic_video(num_frames: usize, seed: u64) -> Result<SyntheticVideo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let near_tex = [FaceTexture::random(&mut rng), FaceTexture::random(&mut rng)];
    let far_tex = [FaceTexture::random(&mut rng), FaceTexture::random(&mut rng), FaceTexture::random(&mut rng)];
    let far_side = NEAR_FACE / FAR_SCALE;
    let mut frames = Vec::with_capacity(num_frames);
    let mut dets = Vec::new();
    let mut gt = GroundTruth::default();
    for f in 0..num_frames as u64 {
        let mut canvas = Canvas::new(VIDEO_WIDTH, VIDEO_HEIGHT, 0.5);
        canvas.add_noise(0.01, &mut rng);
        let mut jitter = |r: i32| jitter_px(&mut rng, r);

        let near = [
            BoundingBox::new(16 + jitter(6), 170 + jitter(6), NEAR_FACE, NEAR_FACE)?,
            BoundingBox::new(240 + jitter(6), 172 + jitter(6), NEAR_FACE, NEAR_FACE)?,
        ];
        let disks = [(185.0 + jitter(5) as f64, 200.0 + jitter(5) as f64), (390.0 + jitter(5) as f64, 100.0 + jitter(5) as f64)];
        let far = [
            BoundingBox::new(30 + jitter(8), 30 + jitter(8), far_side, far_side)?,
            BoundingBox::new(120 + jitter(8), 55 + jitter(8), far_side, far_side)?,
            BoundingBox::new(230 + jitter(8), 25 + jitter(8), far_side, far_side)?,
        ];
        let disk_phase = jitter(100) as f64 * 0.05;

        for (b, t) in near.iter().zip(&near_tex) {
            canvas.add_face(b, t);
        }
        for (b, t) in far.iter().zip(&far_tex) {
            canvas.add_face(b, t);
        }
        for &(cx, cy) in &disks {
            canvas.add_textured_disk(cx, cy, DISK_RADIUS, DISK_FREQ, 0.25, disk_phase);
        }

        for b in near.iter().chain(&far) {
            let jittered = BoundingBox::new(b.x + jitter_px(&mut rng, 2), b.y + jitter_px(&mut rng, 2), b.w, b.h)?;
            let score = rng.gen_range(0.6f32..0.99);
            dets.push(Detection::new(f, jittered, DetectionKind::Face, score)?);
        }
        for b in &near {
            gt.push(f, Annotation { bbox: *b, person_id: None });
        }
        for &(cx, cy) in &disks {
            gt.push(f, Annotation { bbox: disk_bounds(cx, cy, DISK_RADIUS), person_id: None });
        }
        frames.push((f, canvas.finish()?));
    }
    Ok(SyntheticVideo {
        frames,
        face_detections: DetectionSet::from_detections("synthetic", dets),
        ground_truth: gt,
    })
}

fn jitter_px(rng: &mut impl Rng, r: i32) -> i32 {
    rng.gen_range(-r..=r)
}

/// Tight pixel bounds of the disk rendered by [`Canvas::add_textured_disk`].
pub fn disk_bounds(cx: f64, cy: f64, r: f64) -> BoundingBox {
    // Pixel centers at x + 0.5 within r of cx.
    let lo = |c: f64| (c - r - 0.5).ceil() as i32;
    let hi = |c: f64| (c + r - 0.5).floor() as i32;
    let (x0, x1, y0, y1) = (lo(cx), hi(cx), lo(cy), hi(cy));
    BoundingBox {
        x: x0,
        y: y0,
        w: (x1 - x0 + 1) as u32,
        h: (y1 - y0 + 1) as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimated_chirp_is_a_faster_chirp() {
        let c = decimate(&chirp(101, 3, 1.0, 0.05, 0.15).unwrap(), 2).unwrap();
        let d = chirp(51, 2, 1.0, 0.1, 0.3).unwrap();
        for (a, b) in c.data().iter().zip(d.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn decimate_halves_dims() {
        let img = RasterF32::from_fn(5, 4, |x, y| (x + 10 * y) as f32).unwrap();
        let d = decimate(&img, 2).unwrap();
        assert_eq!(d.dims(), (3, 2));
        assert_eq!(d.get(2, 1), 24.0);
    }

    #[test]
    fn disk_bounds_match_rendering() {
        let mut c = Canvas::new(120, 100, 0.0);
        c.add_textured_disk(57.3, 48.9, 20.0, 0.2, 0.25, 0.3);
        let r = c.finish().unwrap();
        let b = disk_bounds(57.3, 48.9, 20.0);
        let mut xs = (usize::MAX, 0);
        let mut ys = (usize::MAX, 0);
        for y in 0..100 {
            for x in 0..120 {
                let (dx, dy) = (x as f64 + 0.5 - 57.3, y as f64 + 0.5 - 48.9);
                if dx * dx + dy * dy <= 400.0 {
                    xs = (xs.0.min(x), xs.1.max(x));
                    ys = (ys.0.min(y), ys.1.max(y));
                }
            }
        }
        assert_eq!((b.x as usize, b.right() as usize - 1), xs);
        assert_eq!((b.y as usize, b.bottom() as usize - 1), ys);
        assert!(r.data().iter().any(|&v| v > 0.0));
    }

    #[test]
    fn fixtures_are_seeded() {
        let a = face_scale_fixture(3, 5, 9).unwrap();
        let b = face_scale_fixture(3, 5, 9).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a[0].frame, b[0].frame);
        let near = a.iter().flat_map(|f| &f.faces).filter(|f| f.1).count();
        let far = a.iter().flat_map(|f| &f.faces).filter(|f| !f.1).count();
        assert_eq!((near, far), (3, 5));
    }

    #[test]
    fn video_layout_is_disjoint() {
        let v = synthetic_video(3, 1).unwrap();
        assert_eq!(v.frames.len(), 3);
        assert_eq!(v.face_detections.len(), 15);
        for anns in v.ground_truth.frames.values() {
            assert_eq!(anns.len(), 4);
            for (i, a) in anns.iter().enumerate() {
                assert!(a.bbox.clip(VIDEO_WIDTH, VIDEO_HEIGHT) == Some(a.bbox));
                for b in &anns[i + 1..] {
                    assert_eq!(a.bbox.intersection_area(&b.bbox), 0);
                }
            }
        }
    }
}
