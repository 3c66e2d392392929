//! Temporal filtering: Butterworth band-pass design in second-order
//! sections, causal cascade evaluation, and Tukey tapers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::TimeSeries1D;

/// One second-order section,
/// `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b0: T,
    pub b1: T,
    pub b2: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Real> Biquad<T> {
    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let a1 = self.a1.as_f64();
        let a2 = self.a2.as_f64();
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    pub fn pole_radius(&self) -> f64 {
        let [p, q] = self.poles();
        p.norm().max(q.norm())
    }

    pub fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        let num = self.b0.as_f64() + zi * self.b1.as_f64() + zi2 * self.b2.as_f64();
        let den = 1.0 + zi * self.a1.as_f64() + zi2 * self.a2.as_f64();
        num / den
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter<T> {
    sections: Vec<Biquad<T>>,
}

impl<T: Real> IirFilter<T> {
    pub fn new(sections: Vec<Biquad<T>>) -> Result<Self> {
        let filter = Self { sections };
        let radius = filter.max_pole_radius();
        if !(radius < 1.0) {
            return Err(Error::UnstableFilter { radius });
        }
        Ok(filter)
    }

    pub fn sections(&self) -> &[Biquad<T>] {
        &self.sections
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections.iter().map(Biquad::pole_radius).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_radius() < 1.0
    }

    /// Complex response at `freq` Hz for sampling rate `sample_rate`.
    pub fn response(&self, freq: f64, sample_rate: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * freq / sample_rate);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z))
    }

    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        self.response(freq, sample_rate).norm()
    }

    /// Causal single pass from zero state, direct form II transposed.
    pub fn apply(&self, input: &[T]) -> Vec<T> {
        let mut out = input.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, signal: &mut [T]) {
        for s in &self.sections {
            let (mut z1, mut z2) = (T::zero(), T::zero());
            for v in signal.iter_mut() {
                let x = *v;
                let y = s.b0 * x + z1;
                z1 = s.b1 * x - s.a1 * y + z2;
                z2 = s.b2 * x - s.a2 * y;
                *v = y;
            }
        }
    }
}

/// Butterworth band-pass: analog prototype of `order`, low-pass to
/// band-pass transform, bilinear transform with pre-warped edges, and
/// one section per conjugate pole pair. Unity gain at the band centre.
pub fn design_butterworth_bandpass<T: Real>(order: usize, band: (f64, f64), sample_rate: f64) -> Result<IirFilter<T>> {
    if !matches!(order, 2 | 4 | 8) {
        return Err(Error::InvalidParameter(format!(
            "Butterworth order must be 2, 4 or 8, got {order}"
        )));
    }
    let (low, high) = band;
    let nyquist = sample_rate / 2.0;
    if !(sample_rate > 0.0 && low > 0.0 && low < high && high < nyquist) {
        return Err(Error::BandOutOfRange { low, high, nyquist });
    }

    let fs2 = 2.0 * sample_rate;
    let w_low = fs2 * (PI * low / sample_rate).tan();
    let w_high = fs2 * (PI * high / sample_rate).tan();
    let bandwidth = w_high - w_low;
    let center_sq = w_low * w_high;

    let n = order as f64;
    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let proto = Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n));
        let half = proto * (bandwidth / 2.0);
        let root = (half * half - center_sq).sqrt();
        for s in [half + root, half - root] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    let mut denominators = pair_poles(&poles)?;
    denominators.sort_by(|a, b| {
        let ra = a.1.abs().sqrt();
        let rb = b.1.abs().sqrt();
        ra.total_cmp(&rb)
    });

    // Each section carries one zero at z = 1 and one at z = -1.
    let center = 2.0 * (center_sq.sqrt() / fs2).atan();
    let z0 = Complex64::from_polar(1.0, center);
    let zi = z0.inv();
    let raw = denominators.iter().fold(Complex64::new(1.0, 0.0), |acc, &(a1, a2)| {
        acc * (1.0 - zi * zi) / (1.0 + zi * a1 + zi * zi * a2)
    });
    let sign = if raw.re < 0.0 { -1.0 } else { 1.0 };
    let per_section = (1.0 / raw.norm()).powf(1.0 / denominators.len() as f64);

    let sections = denominators
        .iter()
        .enumerate()
        .map(|(i, &(a1, a2))| {
            let g = if i == 0 { sign * per_section } else { per_section };
            Biquad {
                b0: T::lit(g),
                b1: T::zero(),
                b2: T::lit(-g),
                a1: T::lit(a1),
                a2: T::lit(a2),
            }
        })
        .collect();
    IirFilter::new(sections)
}

/// Groups digital poles into `(a1, a2)` denominators: conjugate pairs
/// first, then leftover real poles two at a time.
fn pair_poles(poles: &[Complex64]) -> Result<Vec<(f64, f64)>> {
    let tol = 1e-10;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im.abs() <= tol * p.norm().max(1.0) {
            reals.push(p.re);
        } else if p.im > 0.0 {
            out.push((-2.0 * p.re, p.norm_sqr()));
        }
    }
    if reals.len() % 2 != 0 {
        return Err(Error::Invariant("odd number of real poles".into()));
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        out.push((-(pair[0] + pair[1]), pair[0] * pair[1]));
    }
    if out.len() * 2 != poles.len() {
        return Err(Error::Invariant("unpaired complex pole".into()));
    }
    Ok(out)
}

/// Filters a whole series once with zero initial conditions.
pub fn filter_series<T: Real>(x: &TimeSeries1D<T>, filter: &IirFilter<T>) -> TimeSeries1D<T> {
    TimeSeries1D::new(filter.apply(x.samples()), x.sample_rate()).expect("filtering preserves a valid series")
}

/// Symmetric tapering weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taper<T> {
    weights: Vec<T>,
    alpha: T,
}

impl<T: Real> Taper<T> {
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Shape parameter after clamping.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn energy(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &w| acc + w * w)
    }
}

/// Tukey shape parameter tied to the window length: `f_s / (N - 1)`.
/// Not clamped; [`tukey_taper`] clamps.
pub fn tukey_alpha(sample_rate: f64, window_len: usize) -> f64 {
    sample_rate / (window_len as f64 - 1.0)
}

/// Tapered-cosine window: cosine lobes over the first and last
/// `alpha (N - 1) / 2` samples and exactly 1 in between. `alpha` is clamped
/// to `[0, 1]`; 0 is rectangular and 1 is Hann.
pub fn tukey_taper<T: Real>(len: usize, alpha: f64) -> Result<Taper<T>> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!("taper length must be >= 2, got {len}")));
    }
    if alpha.is_nan() {
        return Err(Error::InvalidParameter("taper alpha is NaN".into()));
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let span = (len - 1) as f64;
    let lobe = alpha * span / 2.0;
    let weights = (0..len)
        .map(|n| {
            let m = n.min(len - 1 - n) as f64;
            if m < lobe {
                T::lit(0.5 * (1.0 + (PI * (-1.0 + 2.0 * m / (alpha * span))).cos()))
            } else {
                T::one()
            }
        })
        .collect();
    Ok(Taper {
        weights,
        alpha: T::lit(alpha),
    })
}
