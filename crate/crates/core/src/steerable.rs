//! Frequency-domain complex steerable filters, band phases and phase-images.
//!
//! Masks are polar separable. The radial part splits the spectrum into
//! octaves with log-radial raised-cosine transitions; the angular part is a
//! `cos^(K-1)` lobe kept on one half-plane only, which makes each spatial
//! filter complex (an even/odd quadrature pair).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::FrameStack;

/// Amplitudes at or below this have no usable phase.
pub const AMPLITUDE_EPS: f64 = 1e-8;

/// Unnormalized-forward / normalized-inverse 2-D DFT over a fixed grid.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.height, self.width)
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, data: &mut [Complex<T>], rows: &Arc<dyn Fft<T>>, cols: &Arc<dyn Fft<T>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "buffer does not match FFT grid");
        rows.process(data);
        let mut t = vec![Complex::new(T::zero(), T::zero()); h * w];
        for y in 0..h {
            for x in 0..w {
                t[x * h + y] = data[y * w + x];
            }
        }
        cols.process(&mut t);
        for x in 0..w {
            for y in 0..h {
                data[y * w + x] = t[x * h + y];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = T::one() / T::from_usize_lossy(self.height * self.width);
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// One oriented band of the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBand<T> {
    pub scale_index: usize,
    pub orientation_index: usize,
    /// 1.0 for the finest octave, halving per coarser octave.
    pub sigma: f64,
    pub theta: f64,
    /// Real transfer mask over the DFT grid, row-major.
    pub mask: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct FilterBank<T: Real> {
    height: usize,
    width: usize,
    n_scales: usize,
    n_orientations: usize,
    bands: Vec<OrientedBand<T>>,
    highpass: Vec<T>,
    lowpass: Vec<T>,
    fft: Fft2<T>,
}

/// Angular frequency of DFT index `i` on an `n`-point axis, in `[-pi, pi)`.
fn axis_freq(i: usize, n: usize) -> f64 {
    let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * k / n as f64
}

/// Rounds values within a few ulps of zero to zero so direction vectors
/// along the axes are exact.
fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

/// `(hi, lo)` of the raised-cosine transition whose upper edge sits at
/// log-radius `edge`; the transition spans one octave below it.
fn transition(log_r: f64, edge: f64) -> (f64, f64) {
    let t = edge - log_r;
    if t <= 0.0 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 1.0)
    } else {
        ((PI / 2.0 * t).cos(), (PI / 2.0 * t).sin())
    }
}

/// Normalizer making `sum_k (alpha cos^(K-1)(theta - theta_k))^2 = 1`.
fn angular_alpha(k: usize) -> f64 {
    let fact = |n: usize| (1..=n).fold(1.0f64, |a, v| a * v as f64);
    2f64.powi(k as i32 - 1) * fact(k - 1) / (k as f64 * fact(2 * (k - 1))).sqrt()
}

/// Builds the polar-separable bank for an `h x w` crop: `n_scales` octave
/// bands times `n_orientations` half-plane angular lobes, plus isotropic
/// high- and lowpass residuals.
pub fn build_filter_bank<T: Real>(
    height: usize,
    width: usize,
    n_scales: usize,
    n_orientations: usize,
) -> Result<FilterBank<T>> {
    if height < 16 || width < 16 || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "filter bank needs even dimensions >= 16, got {height}x{width}"
        )));
    }
    if n_scales == 0 || n_orientations == 0 {
        return Err(Error::InvalidParameter(
            "filter bank needs at least one scale and orientation".into(),
        ));
    }
    let n = height * width;
    let mut log_r = vec![0.0; n];
    let mut omega = vec![(0.0, 0.0); n];
    for y in 0..height {
        for x in 0..width {
            let (wx, wy) = (axis_freq(x, width), axis_freq(y, height));
            omega[y * width + x] = (wx, wy);
            log_r[y * width + x] = wx.hypot(wy).log2();
        }
    }

    let top = PI.log2();
    let mut highpass = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for i in 0..n {
        let (hi, lo) = transition(log_r[i], top);
        highpass[i] = hi;
        acc[i] = lo;
    }

    let alpha = std::f64::consts::SQRT_2 * angular_alpha(n_orientations);
    let power = n_orientations as i32 - 1;
    let mut bands = Vec::with_capacity(n_scales * n_orientations);
    for s in 0..n_scales {
        let edge = top - s as f64 - 1.0;
        let mut radial = vec![0.0; n];
        for i in 0..n {
            let (hi, lo) = transition(log_r[i], edge);
            radial[i] = acc[i] * hi;
            acc[i] *= lo;
        }
        for o in 0..n_orientations {
            let theta = PI * o as f64 / n_orientations as f64;
            let (dx, dy) = (snap(theta.cos()), snap(theta.sin()));
            let mask = (0..n)
                .map(|i| {
                    let (wx, wy) = omega[i];
                    let dot = wx * dx + wy * dy;
                    if i == 0 || dot <= 0.0 || radial[i] == 0.0 {
                        return T::zero();
                    }
                    let c = dot / wx.hypot(wy);
                    T::lit(radial[i] * alpha * c.powi(power))
                })
                .collect();
            bands.push(OrientedBand {
                scale_index: s,
                orientation_index: o,
                sigma: 0.5f64.powi(s as i32),
                theta,
                mask,
            });
        }
    }

    highpass[0] = 0.0;
    acc[0] = 1.0;
    Ok(FilterBank {
        height,
        width,
        n_scales,
        n_orientations,
        bands,
        highpass: highpass.into_iter().map(T::lit).collect(),
        lowpass: acc.into_iter().map(T::lit).collect(),
        fft: Fft2::new(height, width),
    })
}

impl<T: Real> FilterBank<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_scales(&self) -> usize {
        self.n_scales
    }

    pub fn n_orientations(&self) -> usize {
        self.n_orientations
    }

    /// Oriented bands, scale-major.
    pub fn bands(&self) -> &[OrientedBand<T>] {
        &self.bands
    }

    pub fn highpass(&self) -> &[T] {
        &self.highpass
    }

    pub fn lowpass(&self) -> &[T] {
        &self.lowpass
    }

    pub fn fft(&self) -> &Fft2<T> {
        &self.fft
    }

    fn mirror(&self, i: usize) -> usize {
        let (y, x) = (i / self.width, i % self.width);
        ((self.height - y) % self.height) * self.width + (self.width - x) % self.width
    }

    /// `sum |mask|^2` over every band and residual, per DFT bin.
    pub fn energy(&self) -> Vec<f64> {
        (0..self.height * self.width)
            .map(|i| {
                let sq = |v: T| v.as_f64() * v.as_f64();
                self.bands.iter().map(|b| sq(b.mask[i])).sum::<f64>() + sq(self.highpass[i]) + sq(self.lowpass[i])
            })
            .collect()
    }

    /// Energy with each oriented mask averaged against its point reflection,
    /// `(|M(w)|^2 + |M(-w)|^2) / 2`. This is the quantity that sums to one
    /// for half-plane masks and what real-image reconstruction depends on.
    pub fn paired_energy(&self) -> Vec<f64> {
        (0..self.height * self.width)
            .map(|i| {
                let j = self.mirror(i);
                let sq = |v: T| v.as_f64() * v.as_f64();
                self.bands
                    .iter()
                    .map(|b| 0.5 * (sq(b.mask[i]) + sq(b.mask[j])))
                    .sum::<f64>()
                    + sq(self.highpass[i])
                    + sq(self.lowpass[i])
            })
            .collect()
    }

    /// Forward DFT of a real image.
    pub fn spectrum(&self, image: &[T]) -> Result<Vec<Complex<T>>> {
        let n = self.height * self.width;
        if image.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: image.len(),
            });
        }
        let mut buf: Vec<Complex<T>> = image.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    /// Complex coefficients of one band from a precomputed image spectrum.
    pub fn band_coefficients(&self, spectrum: &[Complex<T>], band: usize) -> Result<BandCoefficients<T>> {
        let b = self.band(band)?;
        let mut buf: Vec<Complex<T>> = spectrum.iter().zip(&b.mask).map(|(&s, &m)| s * m).collect();
        self.fft.inverse(&mut buf);
        Ok(BandCoefficients {
            band,
            height: self.height,
            width: self.width,
            coeffs: buf,
        })
    }

    fn band(&self, band: usize) -> Result<&OrientedBand<T>> {
        self.bands
            .get(band)
            .ok_or_else(|| Error::InvalidParameter(format!("band {band} out of range ({} bands)", self.bands.len())))
    }
}

/// Complex response `A e^{i phi}` of one band over the crop.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCoefficients<T> {
    pub band: usize,
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> BandCoefficients<T> {
    pub fn amplitude(&self) -> Vec<T> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }

    /// Phase in `(-pi, pi]`.
    pub fn phase(&self) -> Vec<T> {
        self.coeffs
            .iter()
            .map(|c| {
                let p = c.im.atan2(c.re);
                if p <= -T::PI() {
                    T::PI()
                } else {
                    p
                }
            })
            .collect()
    }
}

/// Every oriented band's coefficients for one image.
pub fn decompose<T: Real>(image: &[T], bank: &FilterBank<T>) -> Result<Vec<BandCoefficients<T>>> {
    let spectrum = bank.spectrum(image)?;
    (0..bank.bands.len())
        .map(|b| bank.band_coefficients(&spectrum, b))
        .collect()
}

/// Sets every coefficient's amplitude to one (zero where the phase is
/// undefined), filters the result through the band again and keeps the real
/// part, scaled into `[-1, 1]` if it leaves that range.
pub fn phase_image<T: Real>(coeffs: &BandCoefficients<T>, bank: &FilterBank<T>, band: usize) -> Result<Vec<T>> {
    if (coeffs.height, coeffs.width) != (bank.height, bank.width) {
        return Err(Error::DimensionMismatch {
            expected: (bank.height, bank.width),
            found: (coeffs.height, coeffs.width),
        });
    }
    let mask = &bank.band(band)?.mask;
    let eps = T::lit(AMPLITUDE_EPS);
    let zero = Complex::new(T::zero(), T::zero());
    let mut buf: Vec<Complex<T>> = coeffs
        .coeffs
        .iter()
        .map(|&c| {
            let a = c.norm();
            if a > eps {
                c / a
            } else {
                zero
            }
        })
        .collect();
    bank.fft.forward(&mut buf);
    // masks are real, so the conjugate mask is the mask itself
    for (v, &m) in buf.iter_mut().zip(mask) {
        *v = *v * m;
    }
    bank.fft.inverse(&mut buf);
    let mut out: Vec<T> = buf.into_iter().map(|c| c.re).collect();
    let peak = out.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if peak > T::one() {
        for v in &mut out {
            *v = *v / peak;
        }
    }
    Ok(out)
}

/// Per-frame crop spectra, computed once and shared by every band.
#[derive(Debug, Clone)]
pub struct CropSpectra<T> {
    spectra: Vec<Vec<Complex<T>>>,
}

impl<T: Real> CropSpectra<T> {
    pub fn new(crops: &FrameStack<T>, bank: &FilterBank<T>) -> Result<Self> {
        check_dims(crops, bank)?;
        let spectra = (0..crops.len())
            .map(|t| bank.spectrum(crops.frame(t)))
            .collect::<Result<_>>()?;
        Ok(Self { spectra })
    }

    /// Phase-images of one band for every frame, `T x h x w`.
    pub fn phase_channel(&self, bank: &FilterBank<T>, band: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.spectra.len() * bank.height * bank.width);
        for s in &self.spectra {
            let c = bank.band_coefficients(s, band)?;
            out.extend(phase_image(&c, bank, band)?);
        }
        Ok(out)
    }
}

fn check_dims<T: Real>(crops: &FrameStack<T>, bank: &FilterBank<T>) -> Result<()> {
    if (crops.height(), crops.width()) != (bank.height, bank.width) {
        return Err(Error::DimensionMismatch {
            expected: (bank.height, bank.width),
            found: (crops.height(), crops.width()),
        });
    }
    Ok(())
}

/// `C x T x h x w` channels: grayscale first, then one phase-image per band
/// in scale-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack<T> {
    data: Vec<T>,
    channels: usize,
    len: usize,
    height: usize,
    width: usize,
    frame_rate: T,
}

impl<T: Real> ChannelStack<T> {
    pub fn channels(&self) -> usize {
        self.channels
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

    /// One channel as `T x h x w`.
    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.len * self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize, y: usize, x: usize) -> T {
        self.data[((c * self.len + t) * self.height + y) * self.width + x]
    }
}

pub fn build_channel_stack<T: Real>(crops: &FrameStack<T>, bank: &FilterBank<T>) -> Result<ChannelStack<T>> {
    let spectra = CropSpectra::new(crops, bank)?;
    let mut data = crops.data().to_vec();
    for b in 0..bank.bands.len() {
        data.extend(spectra.phase_channel(bank, b)?);
    }
    Ok(ChannelStack {
        data,
        channels: 1 + bank.bands.len(),
        len: crops.len(),
        height: crops.height(),
        width: crops.width(),
        frame_rate: crops.frame_rate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(n: usize) -> FilterBank<f64> {
        build_filter_bank(n, n, 3, 4).unwrap()
    }

    fn grating(n: usize, kx: usize, ky: usize, shift: f64) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                let ph = 2.0 * PI * (kx as f64 * (x as f64 - shift) + ky as f64 * y as f64) / n as f64;
                out[y * n + x] = 0.5 + 0.4 * ph.cos();
            }
        }
        out
    }

    fn blob(n: usize, cx: f64, cy: f64, sigma: f64) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                out[y * n + x] = (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
        out
    }

    #[test]
    fn alpha_for_four_orientations() {
        assert!((angular_alpha(4).powi(2) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fft2_round_trip() {
        let f = Fft2::<f64>::new(16, 32);
        let orig: Vec<Complex<f64>> = (0..512).map(|i| Complex::new((i % 7) as f64, (i % 3) as f64)).collect();
        let mut buf = orig.clone();
        f.forward(&mut buf);
        f.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn band_layout() {
        let b = bank(64);
        assert_eq!(b.bands().len(), 12);
        let sig: Vec<f64> = b.bands().iter().map(|x| x.sigma).collect();
        assert_eq!(&sig[..4], &[1.0; 4]);
        assert_eq!(&sig[8..], &[0.25; 4]);
        assert_eq!(b.bands()[5].theta, PI / 4.0);
        assert!(build_filter_bank::<f64>(14, 64, 3, 4).is_err());
        assert!(build_filter_bank::<f64>(33, 64, 3, 4).is_err());
    }

    #[test]
    fn paired_tiling_holds() {
        for n in [32, 64, 128] {
            let e = bank(n).paired_energy();
            for (i, v) in e.iter().enumerate().skip(1) {
                assert!((v - 1.0).abs() < 1e-3, "n={n} bin {i}: {v}");
            }
        }
    }

    #[test]
    fn literal_energy_has_an_uncovered_sector() {
        // half-plane lobes at 0..135 degrees leave (225, 270) degrees empty
        let b = bank(64);
        let e = b.energy();
        let (x, y) = (64 - 6, 64 - 12); // wx < 0, wy < 0, steep
        let i = y * 64 + x;
        assert!(e[i] < 0.5, "{}", e[i]);
    }

    #[test]
    fn half_plane_support_exact() {
        let b = bank(64);
        for band in b.bands() {
            let (dx, dy) = (snap(band.theta.cos()), snap(band.theta.sin()));
            for y in 0..64 {
                for x in 0..64 {
                    let dot = axis_freq(x, 64) * dx + axis_freq(y, 64) * dy;
                    if dot <= 0.0 {
                        assert_eq!(band.mask[y * 64 + x], 0.0);
                    }
                }
            }
        }
        // theta = 0: nothing at negative horizontal frequency
        let m = &b.bands()[0].mask;
        for y in 0..64 {
            for x in 32..64 {
                assert_eq!(m[y * 64 + x], 0.0);
            }
        }
    }

    #[test]
    fn perpendicular_peaks_are_quarter_turn_apart() {
        let b = bank(64);
        let peak_angle = |m: &[f64]| {
            let mut best = (0.0, 0.0);
            for y in 0..64 {
                for x in 0..64 {
                    let v = m[y * 64 + x];
                    if v > best.0 {
                        best = (v, axis_freq(y, 64).atan2(axis_freq(x, 64)));
                    }
                }
            }
            best.1
        };
        for o in 0..2 {
            let a = peak_angle(&b.bands()[o].mask);
            let c = peak_angle(&b.bands()[o + 2].mask);
            let bin = 2.0 * PI / 64.0;
            assert!(((c - a) - PI / 2.0).abs() <= 0.3 + bin, "{a} {c}");
        }
    }

    #[test]
    fn constant_image_has_no_band_energy() {
        let b = bank(64);
        let img = vec![0.7; 64 * 64];
        for c in decompose(&img, &b).unwrap() {
            assert!(c.amplitude().iter().all(|&a| a < 1e-9));
            assert!(phase_image(&c, &b, c.band).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn grating_selects_its_orientation() {
        // radial peak of the finest octave is pi/2: 16 cycles on 64 px
        let b = bank(64);
        let img = grating(64, 16, 0, 0.0);
        let c = decompose(&img, &b).unwrap();
        let energy = |k: usize| c[k].amplitude().iter().map(|a| a * a).sum::<f64>();
        assert!(energy(0) >= 4.0 * energy(2));
    }

    #[test]
    fn phase_follows_shift() {
        let b = bank(64);
        for (kx, shift) in [(16usize, 1.0), (16, 3.0), (8, 2.0)] {
            let band = if kx == 16 { 0 } else { 4 };
            let a = &decompose(&grating(64, kx, 0, 0.0), &b).unwrap()[band];
            let s = &decompose(&grating(64, kx, 0, shift), &b).unwrap()[band];
            let amp = a.amplitude();
            let max = amp.iter().cloned().fold(0.0, f64::max);
            let want = -2.0 * PI * kx as f64 * shift / 64.0;
            for ((pa, ps), &m) in a.phase().iter().zip(s.phase()).zip(&amp) {
                if m > 0.1 * max {
                    let d = (ps - pa - want).rem_euclid(2.0 * PI);
                    let d = d.min(2.0 * PI - d);
                    assert!(d < 1e-3, "kx={kx} shift={shift}: {d}");
                }
            }
        }
    }

    #[test]
    fn phase_range() {
        let b = bank(32);
        for c in decompose(&blob(32, 15.3, 16.7, 2.0), &b).unwrap() {
            assert!(c.phase().iter().all(|&p| p > -PI && p <= PI));
        }
    }

    #[test]
    fn phase_image_keeps_grating_frequency() {
        let b = bank(64);
        let img = grating(64, 16, 0, 0.0);
        let c = &decompose(&img, &b).unwrap()[0];
        let p = phase_image(c, &b, 0).unwrap();
        assert!(p.iter().all(|v| v.abs() <= 1.0));
        let spec = b.spectrum(&p).unwrap();
        let peak = (1..spec.len())
            .max_by(|&i, &j| spec[i].norm().partial_cmp(&spec[j].norm()).unwrap())
            .unwrap();
        let (py, px) = (peak / 64, peak % 64);
        assert!((py, px) == (0, 16) || (py, px) == (0, 48), "({py}, {px})");
    }

    #[test]
    fn sub_pixel_shift_is_visible_and_monotone() {
        let b = bank(64);
        let base = phase_image(&decompose(&blob(64, 32.0, 32.0, 3.0), &b).unwrap()[0], &b, 0).unwrap();
        let mut prev = 0.0;
        for d in [0.1, 0.2, 0.3] {
            let img = blob(64, 32.0 + d, 32.0, 3.0);
            let p = phase_image(&decompose(&img, &b).unwrap()[0], &b, 0).unwrap();
            let diff = p.iter().zip(&base).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(diff > prev, "delta {d}: {diff} <= {prev}");
            prev = diff;
        }
    }

    #[test]
    fn dimension_checks() {
        let b = bank(32);
        assert!(decompose(&vec![0.0; 31 * 32], &b).is_err());
        let other = bank(64);
        let c = &decompose(&vec![0.0; 64 * 64], &other).unwrap()[0];
        assert!(phase_image(c, &b, 0).is_err());
        let crops = FrameStack::new(vec![0.5; 2 * 16 * 16], 2, 16, 16, 30.0).unwrap();
        assert!(build_channel_stack(&crops, &b).is_err());
    }

    #[test]
    fn constant_crop_stack() {
        let b = bank(32);
        let crops = FrameStack::new(vec![0.25; 32 * 32], 1, 32, 32, 30.0).unwrap();
        let s = build_channel_stack(&crops, &b).unwrap();
        assert_eq!(s.channels(), 13);
        assert!(s.channel(0).iter().all(|&v| v == 0.25));
        for c in 1..13 {
            assert!(s.channel(c).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn static_crop_is_static_in_every_channel() {
        let b = bank(32);
        let frame = blob(32, 14.6, 17.2, 2.5);
        let data: Vec<f64> = (0..60).flat_map(|_| frame.iter().copied()).collect();
        let crops = FrameStack::new(data, 60, 32, 32, 30.0).unwrap();
        let s = build_channel_stack(&crops, &b).unwrap();
        for c in 0..13 {
            for p in 0..32 * 32 {
                let v: Vec<f64> = (0..60).map(|t| s.channel(c)[t * 1024 + p]).collect();
                let m = v.iter().sum::<f64>() / 60.0;
                let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 60.0;
                assert!(var < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic() {
        let b = bank(32);
        let img = blob(32, 15.5, 16.25, 3.0);
        assert_eq!(decompose(&img, &b).unwrap(), decompose(&img, &b).unwrap());
    }

    #[test]
    fn works_in_single_precision() {
        let b = build_filter_bank::<f32>(32, 32, 3, 4).unwrap();
        let img: Vec<f32> = blob(32, 16.0, 16.0, 3.0).into_iter().map(|v| v as f32).collect();
        let c = decompose(&img, &b).unwrap();
        assert_eq!(c.len(), 12);
        let p = phase_image(&c[0], &b, 0).unwrap();
        assert!(p.iter().all(|v| v.abs() <= 1.0));
    }
}
