//! Constant-velocity Kalman smoothing of hand tracks and detrending.
//!
//! Each axis runs its own filter with state `[position, velocity]` and a
//! discrete white-noise-acceleration process model. The smoothed track follows
//! slow limb transport; subtracting it from the detections leaves the small
//! tremor motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{AnalysisConfig, Point2, Trajectory2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams<T> {
    /// Acceleration noise variance, px^2 / frame^4.
    pub process_noise: T,
    /// Detection noise variance, px^2.
    pub measurement_noise: T,
    /// Initial variance of both state components.
    pub initial_variance: T,
}

impl<T: Real> Default for KalmanParams<T> {
    fn default() -> Self {
        Self {
            process_noise: T::lit(0.01),
            measurement_noise: T::lit(4.0),
            initial_variance: T::lit(100.0),
        }
    }
}

impl<T: Real> KalmanParams<T> {
    pub fn new(process_noise: T, measurement_noise: T, initial_variance: T) -> Result<Self> {
        let p = Self {
            process_noise,
            measurement_noise,
            initial_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_config(cfg: &AnalysisConfig) -> Result<Self> {
        Self::new(T::lit(cfg.kalman_q), T::lit(cfg.kalman_r), T::lit(cfg.kalman_p0))
    }

    pub fn validate(&self) -> Result<()> {
        let ok =
            self.process_noise > T::zero() && self.measurement_noise > T::zero() && self.initial_variance > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("Kalman noise parameters must be > 0".into()))
        }
    }
}

/// Large-motion track and the small-motion residual around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTrack<T> {
    pub smooth: Trajectory2D<T>,
    pub residual: Trajectory2D<T>,
}

/// Forward constant-velocity filter on one axis. Frames before the first
/// detection take the first detected position; frames without a detection
/// are predict-only.
fn filter_axis<T: Real>(z: &[T], valid: &[bool], first: usize, params: &KalmanParams<T>) -> Vec<T> {
    let q = params.process_noise;
    let r = params.measurement_noise;
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let two = T::lit(2.0);

    let (mut pos, mut vel) = (z[first], T::zero());
    let (mut p00, mut p01, mut p11) = (params.initial_variance, T::zero(), params.initial_variance);

    let mut out = vec![pos; z.len()];
    for i in first + 1..z.len() {
        pos = pos + vel;
        let n00 = p00 + two * p01 + p11 + quarter * q;
        let n01 = p01 + p11 + half * q;
        let n11 = p11 + q;
        p00 = n00;
        p01 = n01;
        p11 = n11;

        if valid[i] {
            let s = p00 + r;
            let k0 = p00 / s;
            let k1 = p01 / s;
            let innovation = z[i] - pos;
            pos = pos + k0 * innovation;
            vel = vel + k1 * innovation;
            let u00 = (T::one() - k0) * p00;
            let u01 = (T::one() - k0) * p01;
            let u11 = p11 - k1 * p01;
            p00 = u00;
            p01 = u01;
            p11 = u11;
        }
        out[i] = pos;
    }
    out
}

/// Kalman-smooths `raw` and returns the smooth track plus `raw - smooth`.
/// The residual is zero on frames without a detection.
pub fn smooth_trajectory<T: Real>(raw: &Trajectory2D<T>, params: &KalmanParams<T>) -> Result<SmoothedTrack<T>> {
    params.validate()?;
    let valid = raw.valid_mask();
    let valid_count = raw.valid_count();
    if valid_count < 2 {
        return Err(Error::TrajectoryTooShort { valid: valid_count });
    }
    let first = valid.iter().position(|&v| v).expect("at least two valid frames");

    let sx = filter_axis(&raw.xs(), valid, first, params);
    let sy = filter_axis(&raw.ys(), valid, first, params);
    let points = sx.into_iter().zip(sy).map(|(x, y)| Point2::new(x, y)).collect();
    let smooth = Trajectory2D::fully_valid(points, raw.frame_rate())?;

    let diff = detrend(raw, &smooth)?;
    let points = diff
        .points()
        .iter()
        .zip(valid)
        .map(|(&p, &v)| if v { p } else { Point2::default() })
        .collect();
    let residual = Trajectory2D::new(points, valid.to_vec(), raw.frame_rate())?;
    Ok(SmoothedTrack { smooth, residual })
}

/// Pointwise `raw - smooth`, keeping the raw frame rate and validity mask.
pub fn detrend<T: Real>(raw: &Trajectory2D<T>, smooth: &Trajectory2D<T>) -> Result<Trajectory2D<T>> {
    if raw.len() != smooth.len() {
        return Err(Error::LengthMismatch {
            expected: raw.len(),
            found: smooth.len(),
        });
    }
    let points = raw
        .points()
        .iter()
        .zip(smooth.points())
        .map(|(a, b)| Point2::new(a.x - b.x, a.y - b.y))
        .collect();
    Trajectory2D::new(points, raw.valid_mask().to_vec(), raw.frame_rate())
}
