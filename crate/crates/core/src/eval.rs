//! Accelerometer ground truth and MAE / accuracy reporting.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{SpectralChain, VideoResult};
use crate::psd::Psd;
use crate::scalar::Real;
use crate::signal::{AnalysisConfig, TimeSeries1D};
use crate::spectral::{average_psds, periodicity_test};

/// Gate and reference frequency from one accelerometer recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub periodic: bool,
    /// In-band spectral peak; `None` when the trace carries no power at all.
    pub f_gt: Option<f64>,
    pub sample_rate: f64,
    pub window_count: usize,
}

/// Analysis settings rescaled to the accelerometer rate: windows keep their
/// duration and the padded length grows to the next power of two.
pub fn accel_config(cfg: &AnalysisConfig, accel_rate: f64) -> Result<AnalysisConfig> {
    let ratio = accel_rate / cfg.sample_rate;
    let window_len = (cfg.window_len as f64 * ratio).round() as usize;
    let hop = ((cfg.hop as f64 * ratio).round() as usize).max(1);
    let pad = ((cfg.zero_pad_len as f64 * ratio).ceil() as usize)
        .next_power_of_two()
        .max(window_len);
    let out = AnalysisConfig {
        sample_rate: accel_rate,
        window_len,
        hop,
        zero_pad_len: pad,
        ..cfg.clone()
    };
    out.validate()?;
    Ok(out)
}

/// Sums the per-axis PSDs of the mean-removed `ax, ay, az`, averages over
/// windows and applies the k-sigma periodicity test to the in-band result.
pub fn ground_truth_frequency<T: Real>(accel: &[TimeSeries1D<T>; 3], cfg: &AnalysisConfig) -> Result<GroundTruth> {
    let n = accel[0].len();
    let rate = accel[0].sample_rate();
    for s in &accel[1..] {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: s.len(),
            });
        }
        if s.sample_rate() != rate {
            return Err(Error::InvalidParameter(
                "accelerometer axes differ in sample rate".into(),
            ));
        }
    }
    let acfg = accel_config(cfg, rate.as_f64())?;
    let chain = SpectralChain::<T>::new(&acfg, n)?;

    let mut total: Option<Vec<Psd<T>>> = None;
    for axis in accel {
        let mean = crate::scalar::pairwise_sum(axis.samples()) / T::from_usize_lossy(n);
        let mut s: Vec<T> = axis.samples().iter().map(|&v| v - mean).collect();
        chain.bandpass(&mut s);
        let w = chain.series_window_psds(&s)?;
        total = Some(match total {
            None => w,
            Some(acc) => acc
                .iter()
                .zip(&w)
                .map(|(a, b)| {
                    let sum = a.power().iter().zip(b.power()).map(|(&u, &v)| u + v).collect();
                    Psd::new(a.freqs().to_vec(), sum, a.spacing())
                })
                .collect::<Result<_>>()?,
        });
    }
    let windows = total.expect("three axes");
    let mean = average_psds(&windows)?;
    let test = periodicity_test(&mean, T::lit(acfg.k_sigma));
    let silent = mean.power().iter().all(|&p| p == T::zero());
    Ok(GroundTruth {
        periodic: test.is_periodic,
        f_gt: (!silent).then(|| test.peak.as_f64()),
        sample_rate: rate.as_f64(),
        window_count: windows.len(),
    })
}

/// Ground truth stored next to a video, keyed by `video_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    pub periodic: bool,
    pub f_gt: Option<f64>,
}

/// One estimate paired with its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInput {
    pub video_id: String,
    pub task: Option<String>,
    pub variant: Option<String>,
    pub f_star: f64,
    pub f_gt: Option<f64>,
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub video_id: String,
    pub task: Option<String>,
    pub variant: Option<String>,
    pub f_star: f64,
    pub f_gt: Option<f64>,
    pub periodic: bool,
    /// Present only for gated-in rows.
    pub abs_error: Option<f64>,
}

impl EvalRow {
    pub fn gated(&self) -> bool {
        self.abs_error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub gated_out: usize,
    pub correct: usize,
    /// `None` when no row passed the gate.
    pub mae: Option<f64>,
    /// Population standard deviation of the absolute errors.
    pub mae_std: Option<f64>,
    pub accuracy: Option<f64>,
}

fn aggregate<'a>(rows: impl Iterator<Item = &'a EvalRow>, threshold: f64) -> Aggregate {
    let mut errors = Vec::new();
    let mut gated_out = 0;
    for r in rows {
        match r.abs_error {
            Some(e) => errors.push(e),
            None => gated_out += 1,
        }
    }
    let correct = errors.iter().filter(|&&e| e < threshold).count();
    let (mae, mae_std, accuracy) = if errors.is_empty() {
        (None, None, None)
    } else {
        let (m, s) = crate::scalar::mean_and_std(&errors);
        (Some(m), Some(s), Some(correct as f64 / errors.len() as f64))
    };
    Aggregate {
        count: errors.len(),
        gated_out,
        correct,
        mae,
        mae_std,
        accuracy,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub rows: Vec<EvalRow>,
    pub overall: Aggregate,
    pub per_task: BTreeMap<String, Aggregate>,
}

const UNLABELLED: &str = "unlabelled";

impl EvalReport {
    fn task_groups(rows: &[EvalRow], threshold: f64) -> BTreeMap<String, Aggregate> {
        let mut tasks: Vec<&str> = rows.iter().map(|r| r.task.as_deref().unwrap_or(UNLABELLED)).collect();
        tasks.sort_unstable();
        tasks.dedup();
        tasks
            .into_iter()
            .map(|t| {
                let members = rows
                    .iter()
                    .filter(move |r| r.task.as_deref().unwrap_or(UNLABELLED) == t);
                (t.to_string(), aggregate(members, threshold))
            })
            .collect()
    }

    /// Recomputes every aggregate from the rows and compares exactly.
    pub fn verify(&self) -> Result<()> {
        for r in &self.rows {
            let want = match (r.periodic, r.f_gt) {
                (true, Some(g)) => Some((r.f_star - g).abs()),
                _ => None,
            };
            if r.abs_error != want {
                return Err(Error::Invariant(format!("row {} has inconsistent error", r.video_id)));
            }
        }
        if aggregate(self.rows.iter(), self.threshold) != self.overall {
            return Err(Error::Invariant("overall aggregate does not match rows".into()));
        }
        if Self::task_groups(&self.rows, self.threshold) != self.per_task {
            return Err(Error::Invariant("per-task aggregates do not match rows".into()));
        }
        Ok(())
    }
}

/// MAE and accuracy (`|error| < threshold`) over rows that pass the gate.
pub fn evaluate(inputs: &[EvalInput], threshold: f64) -> Result<EvalReport> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    let rows: Vec<EvalRow> = inputs
        .iter()
        .map(|i| EvalRow {
            video_id: i.video_id.clone(),
            task: i.task.clone(),
            variant: i.variant.clone(),
            f_star: i.f_star,
            f_gt: i.f_gt,
            periodic: i.periodic,
            abs_error: match (i.periodic, i.f_gt) {
                (true, Some(g)) => Some((i.f_star - g).abs()),
                _ => None,
            },
        })
        .collect();
    let report = EvalReport {
        threshold,
        overall: aggregate(rows.iter(), threshold),
        per_task: EvalReport::task_groups(&rows, threshold),
        rows,
    };
    report.verify()?;
    Ok(report)
}

/// Pairs each result with the truth of the same `video_id`.
pub fn join_results(results: &[VideoResult], truths: &[TruthRecord]) -> Result<Vec<EvalInput>> {
    let mut by_id: HashMap<&str, &TruthRecord> = HashMap::new();
    for t in truths {
        if by_id.insert(t.video_id.as_str(), t).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate truth for video '{}'",
                t.video_id
            )));
        }
    }
    results
        .iter()
        .map(|r| {
            let id = r
                .video_id
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("result has no video_id".into()))?;
            let t = by_id
                .get(id)
                .ok_or_else(|| Error::InvalidParameter(format!("no ground truth for video '{id}'")))?;
            Ok(EvalInput {
                video_id: id.to_string(),
                task: t.task.clone(),
                variant: Some(r.variant.name().to_string()),
                f_star: r.f_star(),
                f_gt: t.f_gt,
                periodic: t.periodic,
            })
        })
        .collect()
}

/// Plain-text summary of a report.
pub fn format_report(report: &EvalReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"));
    let line = |name: &str, a: &Aggregate| {
        format!(
            "{name}: gated {} (out {}), MAE {} +/- {}, accuracy@{} {} ({}/{})\n",
            a.count,
            a.gated_out,
            opt(a.mae),
            opt(a.mae_std),
            report.threshold,
            opt(a.accuracy),
            a.correct,
            a.count
        )
    };
    let mut out = line("overall", &report.overall);
    for (task, a) in &report.per_task {
        out.push_str(&line(&format!("task {task}"), a));
    }
    out
}
