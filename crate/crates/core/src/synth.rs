//! Seeded synthetic cases: hand tracks, rendered blob videos and
//! accelerometer traces with a known tremor frequency.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{FrameStack, Point2, TimeSeries1D, Trajectory2D};

/// Parameters of one synthetic case. Lengths are in pixels, rates in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub tremor_freq: f64,
    /// Peak displacement along `tremor_axis`; may be sub-pixel.
    pub tremor_amp: f64,
    /// Direction of oscillation; normalized before use.
    pub tremor_axis: [f64; 2],
    /// Pixels per frame.
    pub drift: [f64; 2],
    /// Detection noise on the written trajectory.
    pub noise_std: f64,
    /// Number of frames.
    pub duration: usize,
    pub frame_rate: f64,
    pub blob_sigma: f64,
    pub width: usize,
    pub height: usize,
    /// Position at frame 0.
    pub start: [f64; 2],
    pub seed: u64,
    pub accel_rate: f64,
    pub accel_noise_std: f64,
    pub gravity: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            tremor_freq: 5.0,
            tremor_amp: 1.5,
            tremor_axis: [1.0, 0.0],
            drift: [0.0, 0.0],
            noise_std: 0.0,
            duration: 600,
            frame_rate: 30.0,
            blob_sigma: 3.0,
            width: 96,
            height: 96,
            start: [48.0, 48.0],
            seed: 0,
            accel_rate: 100.0,
            accel_noise_std: 0.0,
            gravity: 9.81,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad(format!("frame_rate must be > 0, got {}", self.frame_rate));
        }
        if !(self.tremor_freq > 0.0 && self.tremor_freq < self.frame_rate / 2.0) {
            return bad(format!(
                "tremor_freq {} outside (0, {})",
                self.tremor_freq,
                self.frame_rate / 2.0
            ));
        }
        if !(self.tremor_amp >= 0.0 && self.tremor_amp.is_finite()) {
            return bad(format!("tremor_amp must be >= 0, got {}", self.tremor_amp));
        }
        if !(self.blob_sigma > 0.0) {
            return bad(format!("blob_sigma must be > 0, got {}", self.blob_sigma));
        }
        let norm = self.tremor_axis[0].hypot(self.tremor_axis[1]);
        if !(norm > 0.0 && norm.is_finite()) {
            return bad("tremor_axis must be a non-zero vector".into());
        }
        if !(self.noise_std >= 0.0 && self.accel_noise_std >= 0.0) {
            return bad("noise levels must be >= 0".into());
        }
        if self.duration == 0 || self.width == 0 || self.height == 0 {
            return bad("duration and frame dimensions must be >= 1".into());
        }
        if !(self.accel_rate > 2.0 * self.tremor_freq) {
            return bad(format!(
                "accel_rate {} cannot represent {} Hz",
                self.accel_rate, self.tremor_freq
            ));
        }
        Ok(())
    }

    fn unit_axis(&self) -> (f64, f64) {
        let n = self.tremor_axis[0].hypot(self.tremor_axis[1]);
        (self.tremor_axis[0] / n, self.tremor_axis[1] / n)
    }

    /// `sin(2 pi f t)` with the phase reduced before scaling, so whole
    /// periods land exactly on zero.
    fn wave(&self, t_cycles: f64) -> f64 {
        (2.0 * PI * t_cycles.fract()).sin()
    }
}

fn normal(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))
}

/// Noise-free positions: start, drift and tremor only.
pub fn clean_trajectory<T: Real>(spec: &SynthSpec) -> Result<Trajectory2D<T>> {
    spec.validate()?;
    let (ax, ay) = spec.unit_axis();
    let points = (0..spec.duration)
        .map(|i| {
            let s = spec.tremor_amp * spec.wave(spec.tremor_freq * i as f64 / spec.frame_rate);
            let x = spec.start[0] + spec.drift[0] * i as f64 + s * ax;
            let y = spec.start[1] + spec.drift[1] * i as f64 + s * ay;
            Point2::new(T::lit(x), T::lit(y))
        })
        .collect();
    Trajectory2D::fully_valid(points, T::lit(spec.frame_rate))
}

/// Detected track (clean positions plus seeded Gaussian noise, x then y per
/// frame) and the true tremor frequency.
pub fn gen_trajectory<T: Real>(spec: &SynthSpec) -> Result<(Trajectory2D<T>, f64)> {
    let clean = clean_trajectory::<f64>(spec)?;
    let noise = normal(spec.noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let points = clean
        .points()
        .iter()
        .map(|p| {
            let nx = noise.sample(&mut rng);
            let ny = noise.sample(&mut rng);
            Point2::new(T::lit(p.x + nx), T::lit(p.y + ny))
        })
        .collect();
    Ok((
        Trajectory2D::fully_valid(points, T::lit(spec.frame_rate))?,
        spec.tremor_freq,
    ))
}

/// Renders an isotropic Gaussian blob (peak 1, zero background) at each
/// trajectory point, evaluated analytically at pixel centres.
pub fn render_frames<T: Real>(traj: &Trajectory2D<T>, spec: &SynthSpec) -> Result<FrameStack<T>> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let sigma = spec.blob_sigma;
    let margin = 3.0 * sigma;
    for (index, p) in traj.points().iter().enumerate() {
        let (x, y) = (p.x.as_f64(), p.y.as_f64());
        let inside = x >= margin && y >= margin && x <= (w as f64 - 1.0) - margin && y <= (h as f64 - 1.0) - margin;
        if !inside {
            return Err(Error::OutOfBounds { index, x, y });
        }
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut data = Vec::with_capacity(traj.len() * w * h);
    let mut gx = vec![0.0; w];
    let mut gy = vec![0.0; h];
    for p in traj.points() {
        let (cx, cy) = (p.x.as_f64(), p.y.as_f64());
        for (x, g) in gx.iter_mut().enumerate() {
            *g = (-(x as f64 - cx).powi(2) * inv).exp();
        }
        for (y, g) in gy.iter_mut().enumerate() {
            *g = (-(y as f64 - cy).powi(2) * inv).exp();
        }
        for &vy in &gy {
            data.extend(gx.iter().map(|&vx| T::lit(vx * vy)));
        }
    }
    FrameStack::new(data, traj.len(), h, w, traj.frame_rate())
}

/// Number of accelerometer samples covering the video's duration.
pub fn accel_len(spec: &SynthSpec) -> usize {
    ((spec.duration as f64 / spec.frame_rate) * spec.accel_rate).round() as usize
}

/// Acceleration of the tremor displacement along the tremor axis in
/// `(ax, ay)`, gravity on `az`, plus seeded noise (ax, ay, az per sample).
pub fn gen_accelerometer<T: Real>(spec: &SynthSpec) -> Result<[TimeSeries1D<T>; 3]> {
    spec.validate()?;
    let n = accel_len(spec).max(1);
    let (ux, uy) = spec.unit_axis();
    let w = 2.0 * PI * spec.tremor_freq;
    let noise = normal(spec.accel_noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let (mut ax, mut ay, mut az) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let s = spec.wave(spec.tremor_freq * i as f64 / spec.accel_rate);
        let a = -(w * w) * spec.tremor_amp * s;
        ax.push(T::lit(a * ux + noise.sample(&mut rng)));
        ay.push(T::lit(a * uy + noise.sample(&mut rng)));
        az.push(T::lit(spec.gravity + noise.sample(&mut rng)));
    }
    let rate = T::lit(spec.accel_rate);
    Ok([
        TimeSeries1D::new(ax, rate)?,
        TimeSeries1D::new(ay, rate)?,
        TimeSeries1D::new(az, rate)?,
    ])
}
