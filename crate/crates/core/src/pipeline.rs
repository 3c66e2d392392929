//! End-to-end estimators: trajectory-based (Lagrangian) and crop-based
//! (Eulerian, grayscale or grayscale plus phase-images).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{design_butterworth_bandpass, tukey_alpha, tukey_taper, IirFilter};
use crate::kalman::{smooth_trajectory, KalmanParams};
use crate::psd::Psd;
use crate::scalar::Real;
use crate::signal::{plan_windows, AnalysisConfig, FrameStack, LagrangianScoring, Trajectory2D, WindowPlan};
use crate::spectral::{
    average_psds, channel_score, mean_rows, periodicity_test, pick_frequency, ChannelPeak, ChannelScore,
    FrequencyEstimate, PsdEstimator,
};
use crate::steerable::{build_filter_bank, CropSpectra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodVariant {
    /// Trajectory with only per-window mean removal.
    Lag,
    /// Trajectory detrended by the Kalman smoother.
    LagSmooth,
    /// Grayscale crop channel only.
    EulerGray,
    /// Grayscale plus one phase-image per oriented band.
    EulerPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lagrangian,
    Eulerian,
}

impl MethodVariant {
    pub const ALL: [MethodVariant; 4] = [Self::Lag, Self::LagSmooth, Self::EulerGray, Self::EulerPhase];

    pub fn family(self) -> Family {
        match self {
            Self::Lag | Self::LagSmooth => Family::Lagrangian,
            Self::EulerGray | Self::EulerPhase => Family::Eulerian,
        }
    }

    pub fn smoothing(self) -> bool {
        self == Self::LagSmooth
    }

    pub fn use_phase(self) -> bool {
        self == Self::EulerPhase
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lag => "lag",
            Self::LagSmooth => "lag-smooth",
            Self::EulerGray => "euler-gray",
            Self::EulerPhase => "euler-phase",
        }
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant '{s}'")))
    }
}

/// In-band peak of a single analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostic {
    pub start: usize,
    pub end: usize,
    pub peak_freq: f64,
    pub peak_value: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    pub variant: MethodVariant,
    pub estimate: FrequencyEstimate<f64>,
    pub is_periodic: bool,
    pub windows: Vec<WindowDiagnostic>,
    /// Configuration actually used, with the effective sample rate.
    pub config: AnalysisConfig,
}

impl VideoResult {
    pub fn f_star(&self) -> f64 {
        self.estimate.f_star
    }
}

/// Band-pass, taper and PSD stages shared by every channel of one video.
#[derive(Debug, Clone)]
pub struct SpectralChain<T: Real> {
    pub filter: IirFilter<T>,
    pub estimator: PsdEstimator<T>,
    pub plan: WindowPlan,
    pub band: (T, T),
}

impl<T: Real> SpectralChain<T> {
    pub fn new(cfg: &AnalysisConfig, total_frames: usize) -> Result<Self> {
        cfg.validate()?;
        let plan = plan_windows(total_frames, cfg.window_len, cfg.hop)?;
        let filter = design_butterworth_bandpass(cfg.filter_order, cfg.band(), cfg.sample_rate)?;
        let taper = tukey_taper(cfg.window_len, tukey_alpha(cfg.sample_rate, cfg.window_len))?;
        let estimator = PsdEstimator::new(&taper, cfg.zero_pad_len, T::lit(cfg.sample_rate))?;
        Ok(Self {
            filter,
            estimator,
            plan,
            band: (T::lit(cfg.band_low), T::lit(cfg.band_high)),
        })
    }

    /// Band-passes `s` in place from rest. The series is first referenced to
    /// its first sample so a constant level does not enter as a step.
    pub fn bandpass(&self, s: &mut [T]) {
        if let Some(&first) = s.first() {
            for v in s.iter_mut() {
                *v = *v - first;
            }
        }
        self.filter.apply_in_place(s);
    }

    fn in_band(&self, power: Vec<T>) -> Result<Psd<T>> {
        Psd::new(self.estimator.freqs().to_vec(), power, self.estimator.spacing())?.restrict(self.band.0, self.band.1)
    }

    /// In-band PSD per window of a series already passed through
    /// [`Self::bandpass`].
    pub fn series_window_psds(&self, filtered: &[T]) -> Result<Vec<Psd<T>>> {
        let mut buf = Vec::new();
        let mut power = vec![T::zero(); self.estimator.bins()];
        self.plan
            .windows
            .iter()
            .map(|w| {
                self.estimator.power_into(&filtered[w.clone()], &mut buf, &mut power)?;
                self.in_band(power.clone())
            })
            .collect()
    }

    /// Spatially averaged in-band PSD per window of a `T x h x w` channel.
    /// Every pixel is band-passed over the full sequence first.
    pub fn channel_window_psds(&self, data: &[T], len: usize, pixels: usize) -> Result<Vec<Psd<T>>> {
        if data.len() != len * pixels {
            return Err(Error::LengthMismatch {
                expected: len * pixels,
                found: data.len(),
            });
        }
        let mut series = vec![T::zero(); pixels * len];
        for p in 0..pixels {
            let s = &mut series[p * len..(p + 1) * len];
            for (t, v) in s.iter_mut().enumerate() {
                *v = data[t * pixels + p];
            }
            self.bandpass(s);
        }
        let bins = self.estimator.bins();
        let mut flat = vec![T::zero(); pixels * bins];
        let mut buf = Vec::new();
        let mut out = Vec::with_capacity(self.plan.len());
        for w in &self.plan.windows {
            for p in 0..pixels {
                let s = &series[p * len..(p + 1) * len];
                self.estimator
                    .power_into(&s[w.clone()], &mut buf, &mut flat[p * bins..(p + 1) * bins])?;
            }
            out.push(self.in_band(mean_rows(&flat, pixels, bins)?)?);
        }
        Ok(out)
    }
}

fn effective_config(cfg: &AnalysisConfig, rate: f64) -> Result<AnalysisConfig> {
    let cfg = cfg.with_sample_rate(rate);
    cfg.validate()?;
    Ok(cfg)
}

fn estimate_to_f64<T: Real>(e: FrequencyEstimate<T>) -> FrequencyEstimate<f64> {
    FrequencyEstimate {
        f_star: e.f_star.as_f64(),
        channel: e.channel,
        score: e.score.as_f64(),
        channel_peaks: e
            .channel_peaks
            .into_iter()
            .map(|p| ChannelPeak {
                channel: p.channel,
                freq: p.freq.as_f64(),
                score: p.score.as_f64(),
            })
            .collect(),
        window_count: e.window_count,
    }
}

/// Per-window winner across channels using that window's score term alone.
fn window_diagnostics<T: Real>(plan: &WindowPlan, channels: &[Vec<Psd<T>>], k: T) -> Result<Vec<WindowDiagnostic>> {
    plan.windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let scores = channels
                .iter()
                .enumerate()
                .map(|(c, psds)| channel_score(c, &psds[i..=i], k))
                .collect::<Result<Vec<_>>>()?;
            let e = pick_frequency(&scores)?;
            Ok(WindowDiagnostic {
                start: w.start,
                end: w.end,
                peak_freq: e.f_star.as_f64(),
                peak_value: e.score.as_f64(),
                channel: e.channel,
            })
        })
        .collect()
}

/// Fills frames without a detection with the previous detection (the first
/// detection for leading gaps).
fn hold_last_valid<T: Real>(values: &[T], valid: &[bool]) -> Result<Vec<T>> {
    let first = valid.iter().position(|&v| v).ok_or(Error::Empty("valid detections"))?;
    let mut last = values[first];
    Ok(values
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| {
            if ok {
                last = v;
            }
            last
        })
        .collect())
}

/// Frequency of the trajectory's small motion. With `smoothing`, the Kalman
/// track is subtracted first; otherwise only the per-window mean is removed.
pub fn lagrangian_estimate<T: Real>(
    traj: &Trajectory2D<T>,
    cfg: &AnalysisConfig,
    smoothing: bool,
) -> Result<VideoResult> {
    let cfg = effective_config(cfg, traj.frame_rate().as_f64())?;
    if traj.valid_count() == 0 {
        return Err(Error::Empty("valid detections"));
    }
    let chain = SpectralChain::<T>::new(&cfg, traj.len())?;
    let (mut xs, mut ys) = if smoothing {
        let s = smooth_trajectory(traj, &KalmanParams::from_config(&cfg)?)?;
        (s.residual.xs(), s.residual.ys())
    } else {
        let valid = traj.valid_mask();
        (hold_last_valid(&traj.xs(), valid)?, hold_last_valid(&traj.ys(), valid)?)
    };
    chain.bandpass(&mut xs);
    chain.bandpass(&mut ys);
    let px = chain.series_window_psds(&xs)?;
    let py = chain.series_window_psds(&ys)?;
    let windows: Vec<Psd<T>> = px
        .iter()
        .zip(&py)
        .map(|(a, b)| {
            let sum = a.power().iter().zip(b.power()).map(|(&u, &v)| u + v).collect();
            Psd::new(a.freqs().to_vec(), sum, a.spacing())
        })
        .collect::<Result<_>>()?;

    let k = T::lit(cfg.k_sigma);
    let mean = average_psds(&windows)?;
    let periodic = periodicity_test(&mean, k);
    let estimate = match cfg.lagrangian_scoring {
        LagrangianScoring::Average => {
            let (f_star, score) = mean.peak();
            FrequencyEstimate {
                f_star,
                channel: 0,
                score,
                channel_peaks: vec![ChannelPeak {
                    channel: 0,
                    freq: f_star,
                    score,
                }],
                window_count: windows.len(),
            }
        }
        LagrangianScoring::Score => pick_frequency(&[channel_score(0, &windows, k)?])?,
    };
    let windows = window_diagnostics(&chain.plan, &[windows], k)?;
    Ok(VideoResult {
        video_id: None,
        variant: if smoothing {
            MethodVariant::LagSmooth
        } else {
            MethodVariant::Lag
        },
        estimate: estimate_to_f64(estimate),
        is_periodic: periodic.is_periodic,
        windows,
        config: cfg,
    })
}

/// Square crops centred on the rounded track position, shifted inward where
/// they would leave the frame.
pub fn crop_track<T: Real>(frames: &FrameStack<T>, track: &Trajectory2D<T>, crop: usize) -> Result<FrameStack<T>> {
    let (h, w) = (frames.height(), frames.width());
    if crop == 0 || crop > h || crop > w {
        return Err(Error::CropTooLarge {
            crop,
            width: w,
            height: h,
        });
    }
    if track.len() != frames.len() {
        return Err(Error::LengthMismatch {
            expected: frames.len(),
            found: track.len(),
        });
    }
    let half = (crop / 2) as i64;
    let origin = |c: T, limit: usize| -> usize {
        let c = c.as_f64().round();
        let c = if c.is_finite() { c as i64 } else { 0 };
        (c - half).clamp(0, (limit - crop) as i64) as usize
    };
    let mut data = Vec::with_capacity(frames.len() * crop * crop);
    for (t, p) in track.points().iter().enumerate() {
        let (x0, y0) = (origin(p.x, w), origin(p.y, h));
        let frame = frames.frame(t);
        for y in y0..y0 + crop {
            data.extend_from_slice(&frame[y * w + x0..y * w + x0 + crop]);
        }
    }
    FrameStack::new(data, frames.len(), crop, crop, frames.frame_rate())
}

/// Frequency of the motion seen in crops that follow the smoothed track.
pub fn eulerian_estimate<T: Real>(
    frames: &FrameStack<T>,
    traj: &Trajectory2D<T>,
    cfg: &AnalysisConfig,
    use_phase: bool,
) -> Result<VideoResult> {
    let rate = frames.frame_rate().as_f64();
    let traj_rate = traj.frame_rate().as_f64();
    if (rate - traj_rate).abs() > 1e-9 * rate {
        return Err(Error::InvalidParameter(format!(
            "frame rate {rate} Hz differs from trajectory rate {traj_rate} Hz"
        )));
    }
    if traj.len() != frames.len() {
        return Err(Error::LengthMismatch {
            expected: frames.len(),
            found: traj.len(),
        });
    }
    let cfg = effective_config(cfg, rate)?;
    let chain = SpectralChain::<T>::new(&cfg, frames.len())?;
    let smooth = smooth_trajectory(traj, &KalmanParams::from_config(&cfg)?)?.smooth;
    let crops = crop_track(frames, &smooth, cfg.crop_size)?;
    let (len, pixels) = (crops.len(), cfg.crop_size * cfg.crop_size);

    let mut channels = vec![chain.channel_window_psds(crops.data(), len, pixels)?];
    if use_phase {
        let bank = build_filter_bank::<T>(cfg.crop_size, cfg.crop_size, cfg.n_scales, cfg.n_orientations)?;
        let spectra = CropSpectra::new(&crops, &bank)?;
        for b in 0..bank.bands().len() {
            let ch = spectra.phase_channel(&bank, b)?;
            channels.push(chain.channel_window_psds(&ch, len, pixels)?);
        }
    }

    let k = T::lit(cfg.k_sigma);
    let scores = channels
        .iter()
        .enumerate()
        .map(|(c, w)| channel_score(c, w, k))
        .collect::<Result<Vec<ChannelScore<T>>>>()?;
    let estimate = pick_frequency(&scores)?;
    let winner = average_psds(&channels[estimate.channel])?;
    let periodic = periodicity_test(&winner, k);
    let windows = window_diagnostics(&chain.plan, &channels, k)?;
    Ok(VideoResult {
        video_id: None,
        variant: if use_phase {
            MethodVariant::EulerPhase
        } else {
            MethodVariant::EulerGray
        },
        estimate: estimate_to_f64(estimate),
        is_periodic: periodic.is_periodic,
        windows,
        config: cfg,
    })
}

/// Dispatches to the estimator of `variant`.
pub fn run_variant<T: Real>(
    variant: MethodVariant,
    frames: Option<&FrameStack<T>>,
    traj: &Trajectory2D<T>,
    cfg: &AnalysisConfig,
) -> Result<VideoResult> {
    match variant.family() {
        Family::Lagrangian => lagrangian_estimate(traj, cfg, variant.smoothing()),
        Family::Eulerian => {
            let frames =
                frames.ok_or_else(|| Error::InvalidParameter(format!("variant {variant} needs a frame sequence")))?;
            eulerian_estimate(frames, traj, cfg, variant.use_phase())
        }
    }
}
