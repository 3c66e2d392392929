//! Tremor frequency estimation from hand tracks and video.
//!
//! Two estimator families share one spectral back end:
//!
//! * Lagrangian: detrend the hand track with a constant-velocity Kalman
//!   smoother and take the peak of the windowed PSD of the residual.
//! * Eulerian: crop the video around the smoothed track, decompose each crop
//!   into a grayscale channel plus unit-amplitude phase-images, and pick the
//!   frequency whose k-sigma channel score is highest.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common choice.

// `!(x > 0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod filters;
pub mod io;
pub mod kalman;
pub mod pipeline;
pub mod psd;
pub mod scalar;
pub mod signal;
pub mod spectral;
pub mod steerable;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{evaluate, ground_truth_frequency, EvalReport, GroundTruth, TruthRecord};
pub use filters::{design_butterworth_bandpass, filter_series, tukey_alpha, tukey_taper, IirFilter, Taper};
pub use kalman::{detrend, smooth_trajectory, KalmanParams, SmoothedTrack};
pub use pipeline::{crop_track, eulerian_estimate, lagrangian_estimate, run_variant, MethodVariant, VideoResult};
pub use psd::{freq_axis, Psd};
pub use scalar::Real;
pub use signal::{plan_windows, AnalysisConfig, FrameStack, Point2, TimeSeries1D, Trajectory2D, WindowPlan};
pub use spectral::{
    channel_score, periodicity_test, pick_frequency, spatial_mean_psd, windowed_psd, ChannelScore, FrequencyEstimate,
};
pub use steerable::{build_channel_stack, build_filter_bank, decompose, phase_image, ChannelStack, FilterBank};
pub use synth::{gen_accelerometer, gen_trajectory, render_frames, SynthSpec};

pub type TimeSeries = signal::TimeSeries1D<f64>;
pub type Trajectory = signal::Trajectory2D<f64>;
pub type Frames = signal::FrameStack<f64>;
pub type PsdF64 = psd::Psd<f64>;
pub type Bank = steerable::FilterBank<f64>;
pub type Estimate = spectral::FrequencyEstimate<f64>;

pub type TimeSeriesF32 = signal::TimeSeries1D<f32>;
pub type TrajectoryF32 = signal::Trajectory2D<f32>;
pub type FramesF32 = signal::FrameStack<f32>;
pub type PsdF32 = psd::Psd<f32>;
pub type BankF32 = steerable::FilterBank<f32>;
