//! 2D FFT on padded frames.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Geometry of a frame embedded in a larger DFT grid with room for a
/// boundary extension on every side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaddedGrid {
    frame_w: usize,
    frame_h: usize,
    pad_x: usize,
    pad_y: usize,
    grid_w: usize,
    grid_h: usize,
}

impl PaddedGrid {
    pub fn for_frame(frame_w: usize, frame_h: usize) -> Self {
        let (pad_x, grid_w) = padded_len(frame_w);
        let (pad_y, grid_h) = padded_len(frame_h);
        Self {
            frame_w,
            frame_h,
            pad_x,
            pad_y,
            grid_w,
            grid_h,
        }
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        (self.frame_w, self.frame_h)
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_w, self.grid_h)
    }

    /// Offset of frame pixel (0, 0) inside the grid.
    pub fn offset(&self) -> (usize, usize) {
        (self.pad_x, self.pad_y)
    }

    /// Embeds `frame` in the grid and continues it past every edge by
    /// autoregressive prediction (rows first, then the columns of the
    /// row-extended grid). Predictions are tapered to zero before they meet the
    /// opposite side's extension, so the periodic grid stays continuous.
    pub fn predictive_pad(&self, frame: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(frame.len(), self.frame_w * self.frame_h);
        let (gw, gh) = (self.grid_w, self.grid_h);
        let mut grid = vec![0.0f64; gw * gh];
        for y in 0..self.frame_h {
            let row = &mut grid[(y + self.pad_y) * gw..(y + self.pad_y + 1) * gw];
            row[self.pad_x..self.pad_x + self.frame_w].copy_from_slice(&frame[y * self.frame_w..(y + 1) * self.frame_w]);
            extend_line(row, self.pad_x, self.frame_w);
        }
        let mut col = vec![0.0f64; gh];
        for x in 0..gw {
            for (j, c) in col.iter_mut().enumerate() {
                *c = grid[j * gw + x];
            }
            extend_line(&mut col, self.pad_y, self.frame_h);
            for (j, c) in col.iter().enumerate() {
                grid[j * gw + x] = *c;
            }
        }
        grid.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    }
}

/// Samples from each edge used to fit the predictor.
const AR_FIT_LEN: usize = 96;
const AR_ORDER: usize = 8;
const TAPER_FRACTION: f64 = 0.25;
/// Relative prediction-error power at which the predictor order stops growing.
const RESIDUAL_FLOOR: f64 = 1e-6;

/// `line[start..start + len]` holds data; fills the rest of the (circular)
/// line with tapered forward and backward predictions.
fn extend_line(line: &mut [f64], start: usize, len: usize) {
    let total = line.len();
    let after = total - start - len;
    let fit = len.min(AR_FIT_LEN);
    let order = AR_ORDER.min(fit / 3);

    let tail = &line[start + len - fit..start + len];
    let fwd = predict(tail, order, after);
    let mut head: Vec<f64> = line[start..start + fit].to_vec();
    head.reverse();
    let bwd = predict(&head, order, start);

    for (j, v) in fwd.into_iter().enumerate() {
        line[start + len + j] = v * taper(j, after);
    }
    for (j, v) in bwd.into_iter().enumerate() {
        line[start - 1 - j] = v * taper(j, start);
    }
}

/// Flat over the first `1 - TAPER_FRACTION` of the extension, then
/// raised-cosine to zero.
fn taper(j: usize, n: usize) -> f64 {
    let ramp = n as f64 * TAPER_FRACTION;
    let flat = n as f64 - ramp;
    let t = j as f64 + 1.0;
    if t <= flat {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (t - flat) / ramp).cos())
    }
}

/// Continues `x` by `steps` samples with a linear predictor of the lowest
/// order that explains the data to [`RESIDUAL_FLOOR`]. Higher orders than
/// needed would fit rounding noise and amplify it along the extension.
fn predict(x: &[f64], max_order: usize, steps: usize) -> Vec<f64> {
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if energy <= f64::MIN_POSITIVE || max_order == 0 {
        return vec![0.0; steps];
    }
    let mut a = Vec::new();
    for p in 1..=max_order {
        let (coef, residual) = forward_backward_fit(x, p);
        a = coef;
        if residual <= RESIDUAL_FLOOR * energy {
            break;
        }
    }
    let p = a.len();
    let mut hist: Vec<f64> = x.to_vec();
    hist.reserve(steps);
    for _ in 0..steps {
        let n = hist.len();
        let next: f64 = (1..=p).map(|k| a[k - 1] * hist[n - k]).sum();
        // Least-squares poles may sit just outside the unit circle; never let
        // the continuation outgrow the data.
        hist.push(next.clamp(-2.0 * peak, 2.0 * peak));
    }
    hist.split_off(x.len())
}

/// Modified covariance (forward-backward least squares) predictor
/// `x[n] ≈ Σ c_k x[n-k]`, with its mean squared residual per sample pair
/// scaled to the data length. Exact for sums of up to `p/2` sinusoids.
fn forward_backward_fit(x: &[f64], p: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    if n <= p {
        return (vec![0.0; p], f64::INFINITY);
    }
    let mut r = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for t in p..n {
        for j in 1..=p {
            let (fj, bj) = (x[t - j], x[t - p + j]);
            rhs[j - 1] += x[t] * fj + x[t - p] * bj;
            for k in j..=p {
                r[(j - 1) * p + k - 1] += fj * x[t - k] + bj * x[t - p + k];
            }
        }
    }
    let trace: f64 = (0..p).map(|j| r[j * p + j]).sum();
    for j in 0..p {
        for k in 0..j {
            r[j * p + k] = r[k * p + j];
        }
        // Tiny ridge so orders above the signal's rank stay solvable.
        r[j * p + j] += 1e-12 * trace / p as f64;
    }
    let c = solve_spd(&mut r, &mut rhs, p);
    let mut residual = 0.0;
    for t in p..n {
        let fwd = x[t] - (1..=p).map(|k| c[k - 1] * x[t - k]).sum::<f64>();
        let bwd = x[t - p] - (1..=p).map(|k| c[k - 1] * x[t - p + k]).sum::<f64>();
        residual += fwd * fwd + bwd * bwd;
    }
    (c, residual * n as f64 / (2 * (n - p)) as f64)
}

/// Cholesky solve of a small symmetric positive definite system, in place.
fn solve_spd(m: &mut [f64], b: &mut [f64], p: usize) -> Vec<f64> {
    for j in 0..p {
        let mut d = m[j * p + j];
        for k in 0..j {
            d -= m[j * p + k] * m[j * p + k];
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        m[j * p + j] = d;
        for i in j + 1..p {
            let mut v = m[i * p + j];
            for k in 0..j {
                v -= m[i * p + k] * m[j * p + k];
            }
            m[i * p + j] = v / d;
        }
    }
    for i in 0..p {
        let mut v = b[i];
        for k in 0..i {
            v -= m[i * p + k] * b[k];
        }
        b[i] = v / m[i * p + i];
    }
    for i in (0..p).rev() {
        let mut v = b[i];
        for k in i + 1..p {
            v -= m[k * p + i] * b[k];
        }
        b[i] = v / m[i * p + i];
    }
    b.to_vec()
}

/// Pad of about half the side (bounded), rounded up to a 5-smooth transform length.
fn padded_len(n: usize) -> (usize, usize) {
    let pad = (n / 2).clamp(8, 128);
    let total = next_fast_len(n + 2 * pad);
    // Split any rounding slack evenly so the frame sits centered.
    (pad + (total - n - 2 * pad) / 2, total)
}

fn next_fast_len(n: usize) -> usize {
    (n..)
        .find(|&m| {
            let mut m = m;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .expect("5-smooth numbers are unbounded")
}

/// Forward/inverse 2D complex FFT over a fixed `w × h` row-major buffer.
pub struct Fft2d {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the `1 / (w·h)` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let norm = 1.0 / (self.w * self.h) as f64;
        buf.iter_mut().for_each(|c| *c *= norm);
    }

    /// Unnormalized inverse transforms of consecutive length-`h` columns stored contiguously.
    pub fn inverse_columns(&self, cols: &mut [Complex64]) {
        self.col_inv.process(cols);
    }

    /// Unnormalized inverse transforms of consecutive length-`w` rows.
    pub fn inverse_rows(&self, rows: &mut [Complex64]) {
        self.row_inv.process(rows);
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.w * self.h);
        // Each row (and each column after the transpose) is an independent 1D transform.
        rows.process(buf);
        let mut t = vec![Complex64::default(); buf.len()];
        transpose::transpose(buf, &mut t, self.w, self.h);
        cols.process(&mut t);
        transpose::transpose(&t, buf, self.h, self.w);
    }
}
