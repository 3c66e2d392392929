//! Power spectral density container and the one-sided frequency axis.

use crate::error::{Error, Result};
use crate::scalar::{argmax_first, Real};

/// One-sided bin frequencies `k * f_s / n_fft` for `k = 0..=n_fft/2`.
///
/// The ratio is formed before scaling so the Nyquist bin of an even-length
/// transform is exactly `f_s / 2`.
pub fn freq_axis<T: Real>(n_fft: usize, sample_rate: T) -> Result<Vec<T>> {
    if n_fft < 2 {
        return Err(Error::InvalidParameter(format!("DFT length must be >= 2, got {n_fft}")));
    }
    if !(sample_rate > T::zero()) {
        return Err(Error::InvalidParameter("sample rate must be > 0".into()));
    }
    let n = T::from_usize_lossy(n_fft);
    Ok((0..=n_fft / 2)
        .map(|k| sample_rate * (T::from_usize_lossy(k) / n))
        .collect())
}

/// Power over a uniformly spaced, ascending frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd<T> {
    freqs: Vec<T>,
    power: Vec<T>,
    spacing: T,
}

impl<T: Real> Psd<T> {
    /// `spacing` is the nominal bin width (`f_s / n_fft`); it is kept
    /// separately so single-bin spectra still know their resolution.
    pub fn new(freqs: Vec<T>, power: Vec<T>, spacing: T) -> Result<Self> {
        if freqs.len() != power.len() {
            return Err(Error::LengthMismatch {
                expected: freqs.len(),
                found: power.len(),
            });
        }
        if freqs.is_empty() {
            return Err(Error::Empty("PSD"));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("PSD axis not strictly ascending".into()));
        }
        if let Some(p) = power.iter().find(|p| !(**p >= T::zero())) {
            return Err(Error::InvalidParameter(format!("negative PSD value {p}")));
        }
        Ok(Self { freqs, power, spacing })
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn power(&self) -> &[T] {
        &self.power
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Bins with `low <= f <= high`.
    pub fn restrict(&self, low: T, high: T) -> Result<Self> {
        let (freqs, power): (Vec<T>, Vec<T>) = self
            .freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= low && **f <= high)
            .map(|(&f, &p)| (f, p))
            .unzip();
        if freqs.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no PSD bins inside [{low}, {high}] Hz"
            )));
        }
        Ok(Self {
            freqs,
            power,
            spacing: self.spacing,
        })
    }

    /// Lowest-frequency bin attaining the maximum power.
    pub fn peak(&self) -> (T, T) {
        let i = argmax_first(&self.power).unwrap_or(0);
        (self.freqs[i], self.power[i])
    }

    pub fn same_axis(&self, other: &Self) -> bool {
        self.freqs == other.freqs
    }

    pub(crate) fn with_power(&self, power: Vec<T>) -> Self {
        debug_assert_eq!(power.len(), self.freqs.len());
        Self {
            freqs: self.freqs.clone(),
            power,
            spacing: self.spacing,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_sixty_at_thirty_hz() {
        let f = freq_axis(60, 30.0).unwrap();
        assert_eq!(f.len(), 31);
        assert_eq!(f[1], 0.5);
        assert_eq!(f[2], 1.0);
        assert_eq!(*f.last().unwrap(), 15.0);
    }

    #[test]
    fn axis_four_at_four_hz() {
        assert_eq!(freq_axis(4, 4.0).unwrap(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn axis_128_at_thirty_hz() {
        let f: Vec<f64> = freq_axis(128, 30.0).unwrap();
        assert_eq!(f.len(), 65);
        assert_eq!(f[1], 0.234375);
        for w in f.windows(2) {
            assert!((w[1] - w[0] - 30.0 / 128.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_exact_for_even_lengths() {
        for n in (2..2000).step_by(2) {
            for fs in [30.0, 29.97, 100.0, 0.1, 1.0 / 3.0] {
                assert_eq!(*freq_axis(n, fs).unwrap().last().unwrap(), fs / 2.0, "n={n} fs={fs}");
            }
        }
        // odd length: last bin sits below Nyquist
        let f = freq_axis(5, 10.0).unwrap();
        assert_eq!(f.len(), 3);
        assert!(*f.last().unwrap() < 5.0);
    }

    #[test]
    fn axis_rejects_degenerate_input() {
        assert!(freq_axis(1, 30.0).is_err());
        assert!(freq_axis(8, 0.0).is_err());
    }

    #[test]
    fn restrict_is_inclusive() {
        let f = freq_axis(8, 8.0).unwrap();
        let psd = Psd::new(f, vec![0.0, 1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        let r = psd.restrict(1.0, 3.0).unwrap();
        assert_eq!(r.freqs(), &[1.0, 2.0, 3.0]);
        assert_eq!(r.power(), &[1.0, 2.0, 3.0]);
        assert!(psd.restrict(5.5, 6.0).is_err());
    }

    #[test]
    fn rejects_negative_power() {
        assert!(Psd::new(vec![0.0, 1.0], vec![1.0, -1e-9], 1.0).is_err());
    }
}
