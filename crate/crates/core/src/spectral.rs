//! Windowed PSDs, spatial averaging, channel scoring and frequency selection.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::Taper;
use crate::psd::{freq_axis, Psd};
use crate::scalar::{mean_and_std, pairwise_sum, Real};
use crate::signal::TimeSeries1D;

/// Tapered, zero-padded periodogram with a cached FFT plan.
///
/// Power is one-sided density, `|X(f)|^2 / (f_s * sum(w^2))`, with interior
/// bins doubled and the DC bin set to zero.
#[derive(Clone)]
pub struct PsdEstimator<T: Real> {
    taper: Vec<T>,
    n_fft: usize,
    sample_rate: T,
    norm: T,
    freqs: Vec<T>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for PsdEstimator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsdEstimator")
            .field("window_len", &self.taper.len())
            .field("n_fft", &self.n_fft)
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

impl<T: Real> PsdEstimator<T> {
    pub fn new(taper: &Taper<T>, zero_pad_len: usize, sample_rate: T) -> Result<Self> {
        if zero_pad_len < taper.len() {
            return Err(Error::InvalidParameter(format!(
                "zero_pad_len {zero_pad_len} shorter than window {}",
                taper.len()
            )));
        }
        let freqs = freq_axis(zero_pad_len, sample_rate)?;
        let energy = taper.energy();
        if !(energy > T::zero()) {
            return Err(Error::InvalidParameter("taper has zero energy".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(zero_pad_len);
        Ok(Self {
            taper: taper.weights().to_vec(),
            n_fft: zero_pad_len,
            sample_rate,
            norm: T::one() / (sample_rate * energy),
            freqs,
            fft,
        })
    }

    pub fn window_len(&self) -> usize {
        self.taper.len()
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn bins(&self) -> usize {
        self.freqs.len()
    }

    pub fn spacing(&self) -> T {
        self.sample_rate / T::from_usize_lossy(self.n_fft)
    }

    /// Writes the one-sided power of `samples` into `out`, reusing `buf` as
    /// FFT workspace.
    pub fn power_into(&self, samples: &[T], buf: &mut Vec<Complex<T>>, out: &mut [T]) -> Result<()> {
        let n = self.taper.len();
        if samples.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: samples.len(),
            });
        }
        if out.len() != self.bins() {
            return Err(Error::LengthMismatch {
                expected: self.bins(),
                found: out.len(),
            });
        }
        let mean = pairwise_sum(samples) / T::from_usize_lossy(n);
        buf.clear();
        buf.extend(
            samples
                .iter()
                .zip(&self.taper)
                .map(|(&x, &w)| Complex::new((x - mean) * w, T::zero())),
        );
        buf.resize(self.n_fft, Complex::new(T::zero(), T::zero()));
        self.fft.process(buf);

        let two = T::lit(2.0);
        let last = self.bins() - 1;
        let nyquist_doubled = self.n_fft % 2 == 1;
        out[0] = T::zero();
        for k in 1..=last {
            let p = buf[k].norm_sqr() * self.norm;
            out[k] = if k < last || nyquist_doubled { two * p } else { p };
        }
        Ok(())
    }

    pub fn estimate(&self, samples: &[T]) -> Result<Psd<T>> {
        let mut buf = Vec::with_capacity(self.n_fft);
        let mut power = vec![T::zero(); self.bins()];
        self.power_into(samples, &mut buf, &mut power)?;
        Psd::new(self.freqs.clone(), power, self.spacing())
    }
}

/// PSD of one window: mean removal, taper, zero padding, DFT.
pub fn windowed_psd<T: Real>(x: &TimeSeries1D<T>, taper: &Taper<T>, zero_pad_len: usize) -> Result<Psd<T>> {
    PsdEstimator::new(taper, zero_pad_len, x.sample_rate())?.estimate(x.samples())
}

/// Mean of `n_rows` equal-length rows stored contiguously. Summation is
/// pairwise over rows, so every column gets the same tree as
/// [`pairwise_sum`] regardless of how the rows were produced.
pub fn mean_rows<T: Real>(flat: &[T], n_rows: usize, row_len: usize) -> Result<Vec<T>> {
    if n_rows == 0 || row_len == 0 {
        return Err(Error::Empty("rows to average"));
    }
    if flat.len() != n_rows * row_len {
        return Err(Error::LengthMismatch {
            expected: n_rows * row_len,
            found: flat.len(),
        });
    }
    let mut sum = sum_rows(flat, n_rows, row_len);
    let n = T::from_usize_lossy(n_rows);
    for v in &mut sum {
        *v = *v / n;
    }
    Ok(sum)
}

fn sum_rows<T: Real>(flat: &[T], n_rows: usize, row_len: usize) -> Vec<T> {
    const LEAF: usize = 16;
    if n_rows <= LEAF {
        let mut acc = vec![T::zero(); row_len];
        for row in flat.chunks_exact(row_len) {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a = *a + v;
            }
        }
        return acc;
    }
    let mid = n_rows / 2;
    let (lo, hi) = flat.split_at(mid * row_len);
    let mut a = sum_rows(lo, mid, row_len);
    let b = sum_rows(hi, n_rows - mid, row_len);
    for (x, y) in a.iter_mut().zip(b) {
        *x = *x + y;
    }
    a
}

/// Pointwise mean over PSDs sharing one axis.
pub fn spatial_mean_psd<T: Real>(psds: &[Psd<T>]) -> Result<Psd<T>> {
    let first = psds.first().ok_or(Error::Empty("PSD list"))?;
    if let Some(bad) = psds.iter().find(|p| !p.same_axis(first)) {
        return Err(Error::LengthMismatch {
            expected: first.len(),
            found: bad.len(),
        });
    }
    let flat: Vec<T> = psds.iter().flat_map(|p| p.power().iter().copied()).collect();
    let mean = mean_rows(&flat, psds.len(), first.len())?;
    Ok(first.with_power(mean))
}

/// Mean over analysis windows; same arithmetic as [`spatial_mean_psd`].
pub fn average_psds<T: Real>(psds: &[Psd<T>]) -> Result<Psd<T>> {
    spatial_mean_psd(psds)
}

/// Per-window in-band statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats<T> {
    pub mean: T,
    pub std: T,
}

/// `S(f)` for one channel: the window average of `P(f) - mu - k sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScore<T> {
    pub channel: usize,
    pub freqs: Vec<T>,
    pub score: Vec<T>,
    pub window_psds: Vec<Psd<T>>,
    pub window_stats: Vec<WindowStats<T>>,
}

impl<T: Real> ChannelScore<T> {
    pub fn window_count(&self) -> usize {
        self.window_psds.len()
    }

    /// Lowest-frequency maximum of the score.
    pub fn peak(&self) -> (T, T) {
        let i = crate::scalar::argmax_first(&self.score).unwrap_or(0);
        (self.freqs[i], self.score[i])
    }
}

/// Scores in-band window PSDs of one channel. Statistics use the population
/// standard deviation of each window's in-band bins.
pub fn channel_score<T: Real>(channel: usize, window_psds: &[Psd<T>], k: T) -> Result<ChannelScore<T>> {
    let first = window_psds.first().ok_or(Error::Empty("window PSDs"))?;
    if window_psds.iter().any(|p| !p.same_axis(first)) {
        return Err(Error::InvalidParameter(
            "window PSDs do not share a frequency axis".into(),
        ));
    }
    let bins = first.len();
    let mut sum = vec![T::zero(); bins];
    let mut stats = Vec::with_capacity(window_psds.len());
    for psd in window_psds {
        let (mean, std) = mean_and_std(psd.power());
        let offset = mean + k * std;
        for (s, &p) in sum.iter_mut().zip(psd.power()) {
            *s = *s + (p - offset);
        }
        stats.push(WindowStats { mean, std });
    }
    let w = T::from_usize_lossy(window_psds.len());
    let score = sum.into_iter().map(|s| s / w).collect();
    Ok(ChannelScore {
        channel,
        freqs: first.freqs().to_vec(),
        score,
        window_psds: window_psds.to_vec(),
        window_stats: stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPeak<T> {
    pub channel: usize,
    pub freq: T,
    pub score: T,
}

/// The selected frequency and the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate<T> {
    pub f_star: T,
    pub channel: usize,
    pub score: T,
    pub channel_peaks: Vec<ChannelPeak<T>>,
    pub window_count: usize,
}

/// `argmax_f max_c S^c(f)`. Ties go to the lowest frequency, then the lowest
/// channel.
pub fn pick_frequency<T: Real>(scores: &[ChannelScore<T>]) -> Result<FrequencyEstimate<T>> {
    let first = scores.first().ok_or(Error::Empty("channel scores"))?;
    if scores.iter().any(|s| s.freqs != first.freqs) {
        return Err(Error::InvalidParameter(
            "channel scores do not share a frequency axis".into(),
        ));
    }
    let mut best: Option<(usize, usize)> = None;
    for bin in 0..first.freqs.len() {
        for (ci, s) in scores.iter().enumerate() {
            let v = s.score[bin];
            if v.is_nan() {
                continue;
            }
            match best {
                Some((bb, bc)) if !(v > scores[bc].score[bb]) => {}
                _ => best = Some((bin, ci)),
            }
        }
    }
    let (bin, ci) = best.ok_or_else(|| Error::Invariant("all channel scores are NaN".into()))?;
    let channel_peaks = scores
        .iter()
        .map(|s| {
            let (freq, score) = s.peak();
            ChannelPeak {
                channel: s.channel,
                freq,
                score,
            }
        })
        .collect();
    Ok(FrequencyEstimate {
        f_star: first.freqs[bin],
        channel: scores[ci].channel,
        score: scores[ci].score[bin],
        channel_peaks,
        window_count: first.window_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Periodicity<T> {
    pub is_periodic: bool,
    pub peak: T,
    pub peak_power: T,
    pub mean: T,
    pub std: T,
}

/// Peak of an in-band PSD and whether it clears `mean + k * std`.
pub fn periodicity_test<T: Real>(psd: &Psd<T>, k: T) -> Periodicity<T> {
    let (mean, std) = mean_and_std(psd.power());
    let (peak, peak_power) = psd.peak();
    Periodicity {
        is_periodic: peak_power > mean + k * std,
        peak,
        peak_power,
        mean,
        std,
    }
}
