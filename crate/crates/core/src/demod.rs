//! Dominant component analysis.
//!
//! The frame is filtered by every channel of the bank. At each pixel the
//! channel with the largest response magnitude wins; its complex response `g`
//! gives the AM estimate `2|g| / G(ω)`, the FM estimate `cos arg g` and the
//! instantaneous frequency `ω = ∇ arg g`.
//!
//! The factor 2 undoes the analytic channel keeping only one of the two
//! conjugate halves of a real cosine.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::filterbank::FilterBank;
use crate::raster::{IndexRaster, RasterF32};

/// Smallest channel gain the AM correction divides by.
pub const AM_GAIN_FLOOR: f64 = 0.1;

/// Responses below this fraction of the frame's strongest dominant response
/// carry no usable phase: AM and IF are reported as zero there.
pub const RESPONSE_FLOOR: f64 = 1e-6;

/// Per-pixel AM-FM estimates of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AmFmField {
    pub am: RasterF32,
    pub fm_cos: RasterF32,
    /// Horizontal instantaneous frequency, radians/pixel.
    pub if_u: RasterF32,
    /// Vertical instantaneous frequency, radians/pixel.
    pub if_v: RasterF32,
    pub dominant_channel: IndexRaster,
}

impl AmFmField {
    pub fn dims(&self) -> (usize, usize) {
        self.am.dims()
    }

    /// `‖(if_u, if_v)‖` per pixel, radians/pixel.
    pub fn if_magnitude(&self) -> RasterF32 {
        let data = self
            .if_u
            .data()
            .iter()
            .zip(self.if_v.data())
            .map(|(&u, &v)| u.hypot(v))
            .collect();
        RasterF32::from_parts_unchecked(self.am.width(), self.am.height(), data)
    }

    /// `a · cos φ`, the single-component reconstruction of the frame's AC part.
    pub fn reconstruct(&self) -> RasterF32 {
        let data = self.am.data().iter().zip(self.fm_cos.data()).map(|(a, c)| a * c).collect();
        RasterF32::from_parts_unchecked(self.am.width(), self.am.height(), data)
    }
}

/// FM image rescaled from `[-1, 1]` to `[0, 1]` for display.
pub fn fm_image(field: &AmFmField) -> RasterF32 {
    let data = field.fm_cos.data().iter().map(|&c| (c + 1.0) * 0.5).collect();
    RasterF32::from_parts_unchecked(field.am.width(), field.am.height(), data)
}

/// Wrap-free phase increment at `cur`, averaged over the forward and
/// backward neighbour. Exact for linear phase, never exceeds π.
#[inline]
fn phase_step(prev: Option<Complex64>, cur: Complex64, next: Option<Complex64>) -> f64 {
    let mut z = Complex64::default();
    if let Some(n) = next {
        z += n * cur.conj();
    }
    if let Some(p) = prev {
        z += cur * p.conj();
    }
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

#[inline]
fn clamp_to_pi(u: f64, v: f64) -> (f64, f64) {
    let m = u.hypot(v);
    if m > PI {
        (u * PI / m, v * PI / m)
    } else {
        (u, v)
    }
}

/// Instantaneous frequency of a complex response given as two rasters.
///
/// Uses neighbour phase differences `arg(g[x+1]·conj g[x] + g[x]·conj g[x-1])`
/// (one-sided at the borders), so the phase is never unwrapped. Pixels whose
/// magnitude is below [`RESPONSE_FLOOR`] of the maximum report `(0, 0)`.
pub fn phase_gradient(resp_real: &RasterF32, resp_imag: &RasterF32) -> Result<(RasterF32, RasterF32)> {
    if resp_real.dims() != resp_imag.dims() {
        return Err(Error::DimensionMismatch {
            context: "phase_gradient".into(),
            expected: resp_real.dims(),
            found: resp_imag.dims(),
        });
    }
    let (w, h) = resp_real.dims();
    let g: Vec<Complex64> = resp_real
        .data()
        .iter()
        .zip(resp_imag.data())
        .map(|(&re, &im)| Complex64::new(re as f64, im as f64))
        .collect();
    let floor = RESPONSE_FLOOR * g.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut iu = vec![0.0f32; w * h];
    let mut iv = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if g[i].norm() <= floor {
                continue;
            }
            let left = (x > 0).then(|| g[i - 1]);
            let right = (x + 1 < w).then(|| g[i + 1]);
            let up = (y > 0).then(|| g[i - w]);
            let down = (y + 1 < h).then(|| g[i + w]);
            let (u, v) = clamp_to_pi(phase_step(left, g[i], right), phase_step(up, g[i], down));
            iu[i] = u as f32;
            iv[i] = v as f32;
        }
    }
    Ok((
        RasterF32::from_parts_unchecked(w, h, iu),
        RasterF32::from_parts_unchecked(w, h, iv),
    ))
}

/// Channel response on the frame rows plus one guard row above and below,
/// full grid width.
struct ChannelResponse {
    buf: Vec<Complex64>,
}

/// Filters by channel `k` and evaluates its estimates on the frame pixels.
///
/// Only the parts of the inverse transform that are needed are computed:
/// columns holding spectral support, then the frame rows plus one guard row
/// on each side for the vertical phase step.
fn filter_channel(bank: &FilterBank, fft: &Fft2d, spectrum: &[Complex64], k: usize) -> ChannelResponse {
    let grid = bank.grid();
    let (gw, gh) = grid.grid_dims();
    let (_, fh) = grid.frame_dims();
    let (_, oy) = grid.offset();
    let norm = 1.0 / (gw * gh) as f64;

    let support = bank.support(k);
    let mut slot = vec![usize::MAX; gw];
    let mut cols = Vec::new();
    for &(bin, _) in support {
        let u = bin as usize % gw;
        if slot[u] == usize::MAX {
            slot[u] = 0;
            cols.push(u);
        }
    }
    cols.sort_unstable();
    for (s, &u) in cols.iter().enumerate() {
        slot[u] = s;
    }
    let mut colbuf = vec![Complex64::default(); cols.len() * gh];
    for &(bin, gain) in support {
        let (v, u) = (bin as usize / gw, bin as usize % gw);
        colbuf[slot[u] * gh + v] = spectrum[bin as usize] * (gain as f64 * norm);
    }
    if !colbuf.is_empty() {
        fft.inverse_columns(&mut colbuf);
    }

    let rows = fh + 2;
    let mut buf = vec![Complex64::default(); rows * gw];
    for (s, &u) in cols.iter().enumerate() {
        let col = &colbuf[s * gh + oy - 1..s * gh + oy - 1 + rows];
        for (r, &c) in col.iter().enumerate() {
            buf[r * gw + u] = c;
        }
    }
    fft.inverse_rows(&mut buf);
    ChannelResponse { buf }
}

/// Running per-pixel winner. Phase work is deferred to the end, so each
/// channel only costs a magnitude comparison per pixel.
struct Dominant {
    mag2: Vec<f64>,
    channel: Vec<u16>,
    g: Vec<Complex64>,
    step_u: Vec<Complex64>,
    step_v: Vec<Complex64>,
}

impl Dominant {
    fn new(n: usize) -> Self {
        Self {
            mag2: vec![f64::NEG_INFINITY; n],
            channel: vec![0; n],
            g: vec![Complex64::default(); n],
            step_u: vec![Complex64::default(); n],
            step_v: vec![Complex64::default(); n],
        }
    }

    fn merge(&mut self, k: usize, resp: &ChannelResponse, grid: &crate::fft::PaddedGrid) {
        let (gw, _) = grid.grid_dims();
        let (fw, fh) = grid.frame_dims();
        let (ox, _) = grid.offset();
        let buf = &resp.buf;
        for y in 0..fh {
            let row = (y + 1) * gw + ox;
            for x in 0..fw {
                let i = row + x;
                let g = buf[i];
                let m2 = g.norm_sqr();
                let p = y * fw + x;
                // Strict comparison: ties keep the lower channel index.
                if m2 > self.mag2[p] {
                    self.mag2[p] = m2;
                    self.channel[p] = k as u16;
                    self.g[p] = g;
                    self.step_u[p] = buf[i + 1] * g.conj() + g * buf[i - 1].conj();
                    self.step_v[p] = buf[i + gw] * g.conj() + g * buf[i - gw].conj();
                }
            }
        }
    }
}

fn step_angle(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// Splits the AM-FM content of `frame` using the dominant channel of `bank`.
///
/// Deterministic for any thread count: channels may be filtered in parallel
/// but are always merged in index order, and exact magnitude ties keep the
/// lower channel index.
pub fn dca_decompose(frame: &RasterF32, bank: &FilterBank) -> Result<AmFmField> {
    if frame.dims() != bank.frame_dims() {
        return Err(Error::DimensionMismatch {
            context: "dca_decompose frame vs filterbank".into(),
            expected: bank.frame_dims(),
            found: frame.dims(),
        });
    }
    let (fw, fh) = frame.dims();
    let n = fw * fh;
    let mean = frame.mean();
    let centered: Vec<f64> = frame.data().iter().map(|&v| v as f64 - mean).collect();

    let grid = bank.grid();
    let (gw, gh) = grid.grid_dims();
    let fft = Fft2d::new(gw, gh);
    let mut spectrum = grid.predictive_pad(&centered);
    fft.forward(&mut spectrum);

    let mut dom = Dominant::new(n);
    let channels = bank.num_channels();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // Bounded batches keep peak memory at a few frames per worker.
        let batch = rayon::current_num_threads().clamp(1, 8);
        for start in (0..channels).step_by(batch) {
            let end = (start + batch).min(channels);
            let resps: Vec<ChannelResponse> = (start..end)
                .into_par_iter()
                .map(|k| filter_channel(bank, &fft, &spectrum, k))
                .collect();
            for (k, resp) in (start..end).zip(&resps) {
                dom.merge(k, resp, &grid);
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    for k in 0..channels {
        let resp = filter_channel(bank, &fft, &spectrum, k);
        dom.merge(k, &resp, &grid);
    }

    let peak = dom.mag2.iter().copied().fold(0.0, f64::max).sqrt();
    let floor = RESPONSE_FLOOR * peak;
    let spec = bank.spec();
    let mut am = vec![0.0f32; n];
    let mut fm_cos = vec![0.0f32; n];
    let mut if_u = vec![0.0f32; n];
    let mut if_v = vec![0.0f32; n];
    for i in 0..n {
        let g = dom.g[i];
        let m = g.norm();
        if m > 0.0 {
            fm_cos[i] = (g.re / m).clamp(-1.0, 1.0) as f32;
        }
        if m <= floor || peak == 0.0 {
            continue;
        }
        let (u, v) = clamp_to_pi(step_angle(dom.step_u[i]), step_angle(dom.step_v[i]));
        if_u[i] = u as f32;
        if_v[i] = v as f32;
        let gain = spec.channels()[dom.channel[i] as usize]
            .gain(u / (2.0 * PI), v / (2.0 * PI))
            .max(AM_GAIN_FLOOR);
        am[i] = (2.0 * m / gain) as f32;
    }

    Ok(AmFmField {
        am: RasterF32::new(fw, fh, am)?,
        fm_cos: RasterF32::new(fw, fh, fm_cos)?,
        if_u: RasterF32::new(fw, fh, if_u)?,
        if_v: RasterF32::new(fw, fh, if_v)?,
        dominant_channel: IndexRaster::from_parts(fw, fh, dom.channel),
    })
}
