//! Domain types shared by all pipeline stages: sampled series, hand tracks,
//! frame stacks, window plans and the analysis configuration.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries1D<T> {
    samples: Vec<T>,
    sample_rate: T,
}

impl<T: Real> TimeSeries1D<T> {
    pub fn new(samples: Vec<T>, sample_rate: T) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("time series"));
        }
        if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(len - 1) / sample_rate`, in seconds.
    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.samples.len() - 1) / self.sample_rate
    }

    /// Sub-series over a frame range, keeping the sample rate.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.samples.len() || range.start >= range.end {
            return Err(Error::InvalidParameter(format!(
                "range {range:?} outside series of length {}",
                self.samples.len()
            )));
        }
        Self::new(self.samples[range].to_vec(), self.sample_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

/// Per-frame hand location in pixels. Frames without a detection carry
/// `valid = false`; their stored point is not meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory2D<T> {
    points: Vec<Point2<T>>,
    valid: Vec<bool>,
    frame_rate: T,
}

impl<T: Real> Trajectory2D<T> {
    pub fn new(points: Vec<Point2<T>>, valid: Vec<bool>, frame_rate: T) -> Result<Self> {
        if points.len() != valid.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                found: valid.len(),
            });
        }
        if !(frame_rate > T::zero()) || !frame_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(Self {
            points,
            valid,
            frame_rate,
        })
    }

    /// Trajectory where every frame carries a detection.
    pub fn fully_valid(points: Vec<Point2<T>>, frame_rate: T) -> Result<Self> {
        let valid = vec![true; points.len()];
        Self::new(points, valid, frame_rate)
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn frame_rate(&self) -> T {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn xs(&self) -> Vec<T> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<T> {
        self.points.iter().map(|p| p.y).collect()
    }

    /// Every point shifted by `(dx, dy)`.
    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self {
            points: self.points.iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect(),
            valid: self.valid.clone(),
            frame_rate: self.frame_rate,
        }
    }
}

/// `T x H x W` grayscale frames with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack<T> {
    data: Vec<T>,
    len: usize,
    height: usize,
    width: usize,
    frame_rate: T,
}

impl<T: Real> FrameStack<T> {
    pub fn new(data: Vec<T>, len: usize, height: usize, width: usize, frame_rate: T) -> Result<Self> {
        if len == 0 || height == 0 || width == 0 {
            return Err(Error::Empty("frame stack"));
        }
        if data.len() != len * height * width {
            return Err(Error::LengthMismatch {
                expected: len * height * width,
                found: data.len(),
            });
        }
        if !(frame_rate > T::zero()) || !frame_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        if let Some(v) = data.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::InvalidParameter(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self {
            data,
            len,
            height,
            width,
            frame_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame_rate(&self) -> T {
        self.frame_rate
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> T {
        self.data[(t * self.height + y) * self.width + x]
    }

    /// Snaps every intensity onto the grid `k / maxval`, exactly as a
    /// graymap file with that maximum value would store it.
    pub fn quantized(&self, maxval: u16) -> Self {
        let m = T::from_u16(maxval).expect("u16 fits");
        let data = self.data.iter().map(|&v| (v * m).round() / m).collect();
        Self { data, ..self.clone() }
    }
}

/// Analysis windows over a frame sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_len: usize,
    pub hop: usize,
    pub windows: Vec<Range<usize>>,
}

impl WindowPlan {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// All maximal windows of exactly `window_len` frames starting at multiples
/// of `hop`. A trailing partial window is dropped.
pub fn plan_windows(total_frames: usize, window_len: usize, hop: usize) -> Result<WindowPlan> {
    if window_len == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    if hop == 0 {
        return Err(Error::InvalidParameter("hop must be >= 1".into()));
    }
    if total_frames < window_len {
        return Err(Error::VideoTooShort {
            total: total_frames,
            window: window_len,
        });
    }
    let windows = (0..=total_frames - window_len)
        .step_by(hop)
        .map(|s| s..s + window_len)
        .collect();
    Ok(WindowPlan {
        window_len,
        hop,
        windows,
    })
}

/// How the Lagrangian path reduces per-window spectra to one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagrangianScoring {
    /// Average window PSDs, then take the in-band maximum.
    #[default]
    Average,
    /// Treat the trajectory as a single channel scored like the Eulerian path.
    Score,
}

/// Tunable parameters for every stage. Stored flat so it maps one-to-one
/// onto the `key = value` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Video frame rate in Hz.
    pub sample_rate: f64,
    /// Frames per analysis window.
    pub window_len: usize,
    /// Frames between window starts.
    pub hop: usize,
    pub band_low: f64,
    pub band_high: f64,
    /// Standard-deviation multiplier in channel scoring and periodicity gating.
    pub k_sigma: f64,
    /// Side of the square hand crop in pixels.
    pub crop_size: usize,
    pub n_orientations: usize,
    pub n_scales: usize,
    /// DFT length after zero padding.
    pub zero_pad_len: usize,
    /// Analog prototype order of the band-pass filter.
    pub filter_order: usize,
    pub kalman_q: f64,
    pub kalman_r: f64,
    pub kalman_p0: f64,
    pub lagrangian_scoring: LagrangianScoring,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate: 30.0,
            window_len: 60,
            hop: 60,
            band_low: 1.0,
            band_high: 12.0,
            k_sigma: 3.0,
            crop_size: 64,
            n_orientations: 4,
            n_scales: 3,
            zero_pad_len: 512,
            filter_order: 4,
            kalman_q: 0.01,
            kalman_r: 4.0,
            kalman_p0: 100.0,
            lagrangian_scoring: LagrangianScoring::Average,
        }
    }
}

impl AnalysisConfig {
    pub fn band(&self) -> (f64, f64) {
        (self.band_low, self.band_high)
    }

    pub fn with_sample_rate(&self, sample_rate: f64) -> Self {
        Self {
            sample_rate,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate / 2.0;
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample_rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !(self.band_low > 0.0 && self.band_low < self.band_high && self.band_high < nyquist) {
            return Err(Error::BandOutOfRange {
                low: self.band_low,
                high: self.band_high,
                nyquist,
            });
        }
        if !(self.k_sigma > 0.0) {
            return Err(Error::InvalidParameter("k_sigma must be > 0".into()));
        }
        if self.window_len < 2 {
            return Err(Error::InvalidParameter("window_len must be >= 2".into()));
        }
        if self.hop == 0 {
            return Err(Error::InvalidParameter("hop must be >= 1".into()));
        }
        if self.crop_size < 16 || !self.crop_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "crop_size must be even and >= 16, got {}",
                self.crop_size
            )));
        }
        if self.n_orientations == 0 || self.n_scales == 0 {
            return Err(Error::InvalidParameter(
                "n_orientations and n_scales must be >= 1".into(),
            ));
        }
        if self.zero_pad_len < self.window_len {
            return Err(Error::InvalidParameter(format!(
                "zero_pad_len {} shorter than window_len {}",
                self.zero_pad_len, self.window_len
            )));
        }
        if !matches!(self.filter_order, 2 | 4 | 8) {
            return Err(Error::InvalidParameter(format!(
                "filter_order must be 2, 4 or 8, got {}",
                self.filter_order
            )));
        }
        if !(self.kalman_q > 0.0 && self.kalman_r > 0.0 && self.kalman_p0 > 0.0) {
            return Err(Error::InvalidParameter("Kalman noise parameters must be > 0".into()));
        }
        Ok(())
    }
}
