//! `tremor`: analyze videos, materialize synthetic cases, extract
//! accelerometer ground truth and score results.
//!
//! Exit status is 0 on success, 1 for bad input or usage, 2 when an internal
//! consistency check fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tremor_core::eval::{format_report, join_results, EvalReport, TruthRecord};
use tremor_core::io;
use tremor_core::pipeline::{run_variant, Family, MethodVariant, VideoResult};
use tremor_core::synth::clean_trajectory;
use tremor_core::{
    evaluate, gen_accelerometer, gen_trajectory, ground_truth_frequency, render_frames, AnalysisConfig, Error, Result,
};

/// Maxval of frames written by `synth`.
const SYNTH_MAXVAL: u16 = 65535;

const CONFIG_HELP: &str = "\
Config file: flat TOML `key = value`; keys not given take these defaults.
  sample_rate = 30.0          overridden by the frame rate of the input
  window_len = 60             frames per analysis window
  hop = 60                    frames between window starts
  band_low = 1.0              band-pass lower edge, Hz
  band_high = 12.0            band-pass upper edge, Hz
  k_sigma = 3.0               std multiplier in scoring and periodicity gating
  crop_size = 64              square crop side, px (even, >= 16)
  n_orientations = 4
  n_scales = 3
  zero_pad_len = 512          DFT length per window
  filter_order = 4            Butterworth prototype order (2, 4 or 8)
  kalman_q = 0.01             process noise, px^2/frame^4
  kalman_r = 4.0              measurement noise, px^2
  kalman_p0 = 100.0           initial state variance
  lagrangian_scoring = \"average\"   or \"score\"";

#[derive(Debug, Parser)]
#[command(
    name = "tremor",
    version,
    about = "Hand-tremor frequency estimation from video and hand tracks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the tremor frequency of one video and write a JSON result.
    #[command(after_help = CONFIG_HELP)]
    Analyze(AnalyzeArgs),
    /// Write a synthetic case: frames, trajectory and accelerometer trace.
    Synth(SynthArgs),
    /// Print the accelerometer ground truth; optionally save it for `eval`.
    #[command(after_help = CONFIG_HELP)]
    Gt(GtArgs),
    /// Score result files against truth files.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Directory of .pgm frames with a frame_rate.txt sidecar.
    #[arg(long)]
    frames: PathBuf,
    /// CSV with header frame,x,y,valid.
    #[arg(long)]
    trajectory: PathBuf,
    /// One of lag, lag-smooth, euler-gray, euler-phase.
    #[arg(long)]
    variant: MethodVariant,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Identifier used to join with ground truth; defaults to the name of
    /// the directory holding the trajectory.
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML synthetic case description.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_frames: PathBuf,
    #[arg(long)]
    out_trajectory: PathBuf,
    #[arg(long)]
    out_accel: PathBuf,
}

#[derive(Debug, Args)]
struct GtArgs {
    /// CSV with header t,ax,ay,az.
    #[arg(long)]
    accel: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write a truth record (JSON) for `eval`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the name of the directory holding the accelerometer file.
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long)]
    task: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Glob of result files written by `analyze`.
    #[arg(long)]
    results: String,
    /// Glob of truth files written by `gt --out`.
    #[arg(long)]
    truths: String,
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, default_value = "eval_report.json")]
    out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<AnalysisConfig> {
    path.map_or_else(|| Ok(AnalysisConfig::default()), io::load_config)
}

fn default_id(path: &Path) -> String {
    let from_dir = path.canonicalize().ok().and_then(|p| {
        p.parent()
            .and_then(|d| d.file_name())
            .map(|n| n.to_string_lossy().into_owned())
    });
    from_dir
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "video".into())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let mut result: VideoResult = match a.variant.family() {
        Family::Lagrangian => {
            let traj = io::load_trajectory::<f64>(&a.trajectory, io::read_frame_rate(&a.frames)?)?;
            run_variant(a.variant, None, &traj, &cfg)?
        }
        Family::Eulerian => {
            let frames = io::load_frames::<f64>(&a.frames)?;
            let traj = io::load_trajectory::<f64>(&a.trajectory, frames.frame_rate())?;
            run_variant(a.variant, Some(&frames), &traj, &cfg)?
        }
    };
    result.video_id = Some(a.video_id.clone().unwrap_or_else(|| default_id(&a.trajectory)));
    io::write_json(&a.out, &result)?;
    println!(
        "{} {}: f_star {} Hz, periodic {}",
        result.video_id.as_deref().unwrap_or(""),
        result.variant,
        result.f_star(),
        result.is_periodic
    );
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = io::load_spec(&a.spec)?;
    let (traj, truth) = gen_trajectory::<f64>(&spec)?;
    let frames = render_frames(&clean_trajectory::<f64>(&spec)?, &spec)?;
    io::write_frames(&a.out_frames, &frames, SYNTH_MAXVAL)?;
    io::write_trajectory(&a.out_trajectory, &traj)?;
    io::write_accelerometer(&a.out_accel, &gen_accelerometer::<f64>(&spec)?)?;
    println!("wrote {} frames, tremor {truth} Hz", frames.len());
    Ok(())
}

fn gt(a: &GtArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let accel = io::load_accelerometer::<f64>(&a.accel)?;
    let g = ground_truth_frequency(&accel, &cfg)?;
    println!("periodic: {}", g.periodic);
    match g.f_gt {
        Some(f) => println!("f_gt: {f}"),
        None => println!("f_gt: none"),
    }
    if let Some(out) = &a.out {
        let rec = TruthRecord {
            video_id: a.video_id.clone().unwrap_or_else(|| default_id(&a.accel)),
            task: a.task.clone(),
            periodic: g.periodic,
            f_gt: g.f_gt,
        };
        io::write_json(out, &rec)?;
    }
    Ok(())
}

fn expand(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| Error::InvalidParameter(format!("bad glob '{pattern}': {e}")))?;
    let mut out = Vec::new();
    for p in paths {
        out.push(p.map_err(|e| Error::Io {
            path: e.path().to_path_buf(),
            source: std::io::Error::new(e.error().kind(), e.error().to_string()),
        })?);
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidParameter(format!("no files match '{pattern}'")));
    }
    Ok(out)
}

fn eval(a: &EvalArgs) -> Result<()> {
    let results = expand(&a.results)?
        .iter()
        .map(|p| io::read_json::<VideoResult>(p))
        .collect::<Result<Vec<_>>>()?;
    let truths = expand(&a.truths)?
        .iter()
        .map(|p| io::read_json::<TruthRecord>(p))
        .collect::<Result<Vec<_>>>()?;
    let report: EvalReport = evaluate(&join_results(&results, &truths)?, a.threshold)?;
    report.verify()?;
    io::write_json(&a.out, &report)?;
    print!("{}", format_report(&report));
    Ok(())
}

fn run(args: impl IntoIterator<Item = OsString>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Gt(a) => gt(a),
        Command::Eval(a) => eval(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                2
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
