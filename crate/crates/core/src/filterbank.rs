//! Frequency-domain Gabor filterbank for dominant component analysis.
//!
//! Every channel is a polar-separable Gaussian: Gaussian in log-radial
//! frequency times Gaussian in orientation, peak-normalized to 1 at the
//! channel center. Channels are analytic: each one passes a single frequency
//! half-plane, so its output phase is the local demodulation phase.
//!
//! Scales are geometrically spaced between `min_center_freq` and
//! `max_center_freq`; orientations cover `[0, π)` uniformly. Neighbouring
//! channels cross at `1/√2` along each axis, so the worst point of the tiling
//! (between two scales and two orientations at once) still sees gain `1/2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::PaddedGrid;

pub const DEFAULT_NUM_SCALES: usize = 6;
pub const DEFAULT_NUM_ORIENTATIONS: usize = 9;
pub const DEFAULT_MAX_CENTER_FREQ: f64 = 0.4;
pub const DEFAULT_MIN_CENTER_FREQ: f64 = 0.4 / 32.0;

/// Smallest frame side the bank accepts.
pub const MIN_FRAME_SIDE: usize = 16;

/// Gains below this are dropped from the sampled transfer functions.
const SUPPORT_CUTOFF: f64 = 1e-7;

/// One analytic channel. Frequencies are in cycles/pixel, `u` along x, `v` along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborChannel {
    pub index: usize,
    pub center_freq_u: f64,
    pub center_freq_v: f64,
    /// Full width at half gain along the radial axis, in octaves.
    pub radial_bandwidth: f64,
    /// Full width at half gain along the angular axis, in radians.
    pub angular_bandwidth: f64,
    radius: f64,
    orientation: f64,
    log_sigma: f64,
    angle_sigma: f64,
}

impl GaborChannel {
    pub fn center_radius(&self) -> f64 {
        self.radius
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Transfer-function magnitude at an arbitrary frequency.
    pub fn gain(&self, fu: f64, fv: f64) -> f64 {
        let rho = fu.hypot(fv);
        if rho == 0.0 {
            return 0.0;
        }
        let dtheta = wrap_angle(fv.atan2(fu) - self.orientation);
        if dtheta.abs() >= PI / 2.0 {
            return 0.0;
        }
        let lr = (rho / self.radius).ln();
        (-(lr * lr) / (2.0 * self.log_sigma * self.log_sigma) - (dtheta * dtheta) / (2.0 * self.angle_sigma * self.angle_sigma))
            .exp()
    }
}

/// Wraps an angle to `(-π, π]`.
fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Serializable layout parameters; the channel list is derived from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterbankParams {
    #[serde(default = "default_scales")]
    pub num_scales: usize,
    #[serde(default = "default_orientations")]
    pub num_orientations: usize,
    #[serde(default = "default_min_freq")]
    pub min_center_freq: f64,
    #[serde(default = "default_max_freq")]
    pub max_center_freq: f64,
}

fn default_scales() -> usize {
    DEFAULT_NUM_SCALES
}
fn default_orientations() -> usize {
    DEFAULT_NUM_ORIENTATIONS
}
fn default_min_freq() -> f64 {
    DEFAULT_MIN_CENTER_FREQ
}
fn default_max_freq() -> f64 {
    DEFAULT_MAX_CENTER_FREQ
}

impl Default for FilterbankParams {
    fn default() -> Self {
        Self {
            num_scales: DEFAULT_NUM_SCALES,
            num_orientations: DEFAULT_NUM_ORIENTATIONS,
            min_center_freq: DEFAULT_MIN_CENTER_FREQ,
            max_center_freq: DEFAULT_MAX_CENTER_FREQ,
        }
    }
}

/// Validated bank layout. Channel `k` has scale `k / num_orientations`
/// (0 = lowest frequency) and orientation `k % num_orientations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterbankParams", into = "FilterbankParams")]
pub struct FilterbankSpec {
    params: FilterbankParams,
    channels: Vec<GaborChannel>,
}

impl Default for FilterbankSpec {
    fn default() -> Self {
        Self::new(FilterbankParams::default()).expect("default filterbank layout is valid")
    }
}

impl TryFrom<FilterbankParams> for FilterbankSpec {
    type Error = Error;

    fn try_from(p: FilterbankParams) -> Result<Self> {
        Self::new(p)
    }
}

impl From<FilterbankSpec> for FilterbankParams {
    fn from(s: FilterbankSpec) -> Self {
        s.params
    }
}

impl FilterbankSpec {
    pub fn new(params: FilterbankParams) -> Result<Self> {
        let FilterbankParams {
            num_scales,
            num_orientations,
            min_center_freq,
            max_center_freq,
        } = params;
        if num_scales < 2 {
            return Err(Error::config("num_scales", "need at least 2 scales"));
        }
        if num_orientations < 2 {
            return Err(Error::config("num_orientations", "need at least 2 orientations"));
        }
        if num_scales * num_orientations > u16::MAX as usize {
            return Err(Error::config("num_scales", "too many channels"));
        }
        if !(min_center_freq.is_finite() && min_center_freq > 0.0) {
            return Err(Error::config("min_center_freq", "must be positive"));
        }
        if !(max_center_freq.is_finite() && max_center_freq <= 0.5) {
            return Err(Error::config("max_center_freq", "must not exceed 0.5 cycles/pixel"));
        }
        if min_center_freq >= max_center_freq {
            return Err(Error::config("min_center_freq", "must be below max_center_freq"));
        }

        let ratio = (max_center_freq / min_center_freq).powf(1.0 / (num_scales - 1) as f64);
        let crossover_decay = (1.0 / FRAC_1_SQRT_2).ln();
        // Adjacent scales meet at the geometric midpoint, half a step away in log-radius.
        let half_step = ratio.ln() / 2.0;
        let log_sigma = half_step / (2.0 * crossover_decay).sqrt();
        let half_angle = PI / num_orientations as f64 / 2.0;
        let angle_sigma = half_angle / (2.0 * crossover_decay).sqrt();

        let fwhm = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
        let radial_bandwidth = fwhm * log_sigma / std::f64::consts::LN_2;
        let angular_bandwidth = fwhm * angle_sigma;

        let mut channels = Vec::with_capacity(num_scales * num_orientations);
        for s in 0..num_scales {
            let radius = min_center_freq * ratio.powi(s as i32);
            for o in 0..num_orientations {
                let orientation = PI * o as f64 / num_orientations as f64;
                channels.push(GaborChannel {
                    index: s * num_orientations + o,
                    center_freq_u: radius * orientation.cos(),
                    center_freq_v: radius * orientation.sin(),
                    radial_bandwidth,
                    angular_bandwidth,
                    radius,
                    orientation,
                    log_sigma,
                    angle_sigma,
                });
            }
        }
        Ok(Self { params, channels })
    }

    pub fn params(&self) -> &FilterbankParams {
        &self.params
    }

    pub fn channels(&self) -> &[GaborChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn num_scales(&self) -> usize {
        self.params.num_scales
    }

    pub fn num_orientations(&self) -> usize {
        self.params.num_orientations
    }

    pub fn channel(&self, index: usize) -> Result<&GaborChannel> {
        self.channels.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.channels.len(),
        })
    }

    /// Continuous transfer-function magnitude of one channel at `(fu, fv)` cycles/pixel.
    pub fn channel_gain_at(&self, index: usize, freq: (f64, f64)) -> Result<f64> {
        Ok(self.channel(index)?.gain(freq.0, freq.1))
    }
}

/// A bank sampled on the DFT grid of a padded frame.
///
/// Transfer functions are real and non-negative, so each channel is stored as
/// a sparse list of `(bin, gain)` pairs over its support.
#[derive(Debug, Clone)]
pub struct FilterBank {
    spec: FilterbankSpec,
    grid: PaddedGrid,
    support: Vec<Vec<(u32, f32)>>,
}

impl FilterBank {
    pub fn build(frame_w: usize, frame_h: usize, spec: &FilterbankSpec) -> Result<Self> {
        if frame_w < MIN_FRAME_SIDE || frame_h < MIN_FRAME_SIDE {
            return Err(Error::FrameTooSmall {
                width: frame_w,
                height: frame_h,
            });
        }
        let grid = PaddedGrid::for_frame(frame_w, frame_h);
        let (gw, gh) = grid.grid_dims();
        let fu: Vec<f64> = (0..gw).map(|i| bin_freq(i, gw)).collect();
        let fv: Vec<f64> = (0..gh).map(|j| bin_freq(j, gh)).collect();

        let sample = |ch: &GaborChannel| -> Vec<(u32, f32)> {
            let mut out = Vec::new();
            for (j, &v) in fv.iter().enumerate() {
                for (i, &u) in fu.iter().enumerate() {
                    let g = ch.gain(u, v);
                    if g > SUPPORT_CUTOFF {
                        out.push(((j * gw + i) as u32, g as f32));
                    }
                }
            }
            out
        };

        #[cfg(feature = "parallel")]
        let support = {
            use rayon::prelude::*;
            spec.channels().par_iter().map(sample).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let support = spec.channels().iter().map(sample).collect();

        Ok(Self {
            spec: spec.clone(),
            grid,
            support,
        })
    }

    pub fn spec(&self) -> &FilterbankSpec {
        &self.spec
    }

    pub fn frame_dims(&self) -> (usize, usize) {
        self.grid.frame_dims()
    }

    pub fn grid(&self) -> &PaddedGrid {
        &self.grid
    }

    pub fn num_channels(&self) -> usize {
        self.support.len()
    }

    pub(crate) fn support(&self, index: usize) -> &[(u32, f32)] {
        &self.support[index]
    }

    /// Frequency of DFT bin `(i, j)` in cycles/pixel.
    pub fn bin_frequency(&self, i: usize, j: usize) -> (f64, f64) {
        let (gw, gh) = self.grid.grid_dims();
        (bin_freq(i, gw), bin_freq(j, gh))
    }

    /// Dense transfer function of one channel over the padded DFT grid, row-major.
    pub fn transfer_function(&self, index: usize) -> Result<Vec<f32>> {
        let sup = self.support.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.support.len(),
        })?;
        let (gw, gh) = self.grid.grid_dims();
        let mut dense = vec![0.0f32; gw * gh];
        for &(k, g) in sup {
            dense[k as usize] = g;
        }
        Ok(dense)
    }
}

fn bin_freq(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}
