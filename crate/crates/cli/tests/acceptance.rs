//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tremor_core::eval::{join_results, TruthRecord};
use tremor_core::io;
use tremor_core::pipeline::SpectralChain;
use tremor_core::spectral::average_psds;
use tremor_core::synth::clean_trajectory;
use tremor_core::{
    build_filter_bank, channel_score, decompose, design_butterworth_bandpass, evaluate, gen_accelerometer,
    gen_trajectory, ground_truth_frequency, lagrangian_estimate, periodicity_test, render_frames, run_variant,
    tukey_alpha, tukey_taper, windowed_psd, AnalysisConfig, EvalReport, MethodVariant, Psd, SynthSpec, TimeSeries,
    VideoResult,
};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn abs_err(r: &VideoResult, f: f64) -> f64 {
    (r.f_star() - f).abs()
}

fn lagrangian_recovery() -> Outcome {
    let cfg = AnalysisConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for f in [3.0, 4.0, 5.0, 6.0, 8.0] {
        let spec = SynthSpec {
            tremor_freq: f,
            ..SynthSpec::default()
        };
        let (traj, _) = gen_trajectory::<f64>(&spec)?;
        let t0 = Instant::now();
        let r = lagrangian_estimate(&traj, &cfg, true)?;
        let secs = t0.elapsed().as_secs_f64();
        let e = abs_err(&r, f);
        ok &= e <= 0.12 && secs < 1.0;
        parts.push(format!("{f} Hz err {e:.4} ({secs:.3} s)"));
    }
    Ok((ok, parts.join(", ")))
}

fn drift_robustness() -> Outcome {
    let cfg = AnalysisConfig::default();
    let mut passed = 0;
    for seed in 0..20 {
        let spec = SynthSpec {
            drift: [2.0, 0.0],
            noise_std: 0.2,
            seed,
            ..SynthSpec::default()
        };
        let (traj, f) = gen_trajectory::<f64>(&spec)?;
        let with = abs_err(&lagrangian_estimate(&traj, &cfg, true)?, f);
        let without = abs_err(&lagrangian_estimate(&traj, &cfg, false)?, f);
        if with <= without && with <= 0.25 {
            passed += 1;
        }
    }
    let rate = passed as f64 / 20.0;
    Ok((
        rate >= 0.9,
        format!("{passed}/20 seeds pass (rate {rate:.2}, need >= 0.90)"),
    ))
}

fn eulerian_recovery() -> Outcome {
    let cfg = AnalysisConfig::default();
    let spec = SynthSpec::default();
    let (traj, f) = gen_trajectory::<f64>(&spec)?;
    let frames = render_frames(&clean_trajectory::<f64>(&spec)?, &spec)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for v in [MethodVariant::EulerGray, MethodVariant::EulerPhase] {
        let t0 = Instant::now();
        let r = run_variant(v, Some(&frames), &traj, &cfg)?;
        let secs = t0.elapsed().as_secs_f64();
        let e = abs_err(&r, f);
        ok &= e <= 0.12 && secs < 60.0;
        parts.push(format!("{v} err {e:.4} ({secs:.2} s)"));
    }
    Ok((ok, parts.join(", ")))
}

/// 300 frames keep the drifting frame stack near 130 MB (680 x 80 px).
fn subpixel_sensitivity() -> Outcome {
    let cfg = AnalysisConfig::default();
    let duration = 300;
    let mut passed = 0;
    let (mut sum_gray, mut sum_phase) = (0.0, 0.0);
    for seed in 0..20 {
        let spec = SynthSpec {
            tremor_amp: 0.3,
            drift: [2.0, 0.0],
            noise_std: 0.2,
            duration,
            width: 40 + 2 * (duration - 1) + 42,
            height: 80,
            start: [40.0, 40.0],
            seed,
            ..SynthSpec::default()
        };
        let (traj, f) = gen_trajectory::<f64>(&spec)?;
        let frames = render_frames(&clean_trajectory::<f64>(&spec)?, &spec)?;
        let gray = abs_err(&run_variant(MethodVariant::EulerGray, Some(&frames), &traj, &cfg)?, f);
        let phase = abs_err(&run_variant(MethodVariant::EulerPhase, Some(&frames), &traj, &cfg)?, f);
        sum_gray += gray;
        sum_phase += phase;
        if phase <= 0.25 && phase <= gray {
            passed += 1;
        }
    }
    let rate = passed as f64 / 20.0;
    Ok((
        rate >= 0.8,
        format!(
            "{passed}/20 seeds pass (rate {rate:.2}, need >= 0.80); mean err gray {:.3}, phase {:.3}",
            sum_gray / 20.0,
            sum_phase / 20.0
        ),
    ))
}

fn score_example() -> Outcome {
    let psd: Psd<f64> = Psd::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 10.0, 0.0, 0.0], 1.0)?;
    let s = channel_score(0, &[psd], 3.0)?;
    let want: [f64; 5] = [-14.0, -14.0, -6.0, -14.0, -14.0];
    let ok = s.score.len() == want.len() && s.score.iter().zip(&want).all(|(a, b)| a.to_bits() == b.to_bits());
    Ok((ok, format!("got {:?}, want {want:?}", s.score)))
}

fn tukey_shape() -> Outcome {
    let alpha = tukey_alpha(30.0, 60);
    let exact = alpha == 30.0 / 59.0;
    let taper = tukey_taper::<f64>(60, alpha)?;
    let kept = taper.alpha() == 30.0 / 59.0;
    let raw = tukey_alpha(30.0, 20);
    let clamped = tukey_taper::<f64>(20, raw)?;
    let hann = clamped
        .weights()
        .iter()
        .enumerate()
        .all(|(i, &w)| (w - 0.5 * (1.0 - (2.0 * PI * i as f64 / 19.0).cos())).abs() < 1e-12);
    let ok = exact && kept && clamped.alpha() == 1.0 && raw > 1.0 && hann;
    Ok((
        ok,
        format!(
            "alpha(30, 60) = {alpha} (30/59 exact: {exact}); alpha(30, 20) = {raw:.4} clamped to {} (Hann: {hann})",
            clamped.alpha()
        ),
    ))
}

fn filter_correctness() -> Outcome {
    let fs = 30.0;
    let filt = design_butterworth_bandpass::<f64>(4, (1.0, 12.0), fs)?;
    let db = |f: f64| 20.0 * filt.magnitude(f, fs).log10();
    let (lo, hi) = (db(1.0), db(12.0));
    let dc = filt.magnitude(0.0, fs);

    let n = 4096;
    let mut impulse = vec![0.0; n];
    impulse[0] = 1.0;
    let h = filt.apply(&impulse);
    let mut worst: f64 = 0.0;
    for k in 0..=n / 2 {
        let dft: Complex64 = h
            .iter()
            .enumerate()
            .map(|(i, &v)| Complex64::from_polar(v, -2.0 * PI * (k * i % n) as f64 / n as f64))
            .sum();
        let want = filt.response(k as f64 * fs / n as f64, fs);
        worst = worst.max((dft - want).norm());
    }
    let ok = (lo + 3.0).abs() <= 0.1 && (hi + 3.0).abs() <= 0.1 && dc < 1e-6 && worst <= 1e-6;
    Ok((
        ok,
        format!("edges {lo:.4} dB / {hi:.4} dB, DC gain {dc:.2e}, impulse-response DFT max deviation {worst:.2e}"),
    ))
}

/// Direct one-sided periodogram: mean removal, taper, zero padding.
fn naive_psd(x: &[f64], w: &[f64], n_fft: usize, fs: f64) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let bins = n_fft / 2 + 1;
    (0..bins)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for (i, (&xi, &wi)) in x.iter().zip(w).enumerate() {
                let ang = -2.0 * PI * ((k * i) % n_fft) as f64 / n_fft as f64;
                re += (xi - mean) * wi * ang.cos();
                im += (xi - mean) * wi * ang.sin();
            }
            let one_sided = if k == bins - 1 && n_fft.is_multiple_of(2) {
                1.0
            } else {
                2.0
            };
            one_sided * (re * re + im * im) / (fs * energy)
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.random_range(8..=120);
        let pad = len + rng.random_range(0..=200);
        let fs = rng.random_range(10.0..200.0);
        let alpha = rng.random_range(0.0..=1.0);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let taper = tukey_taper::<f64>(len, alpha)?;
        let got = windowed_psd(&TimeSeries::new(x.clone(), fs)?, &taper, pad)?;
        let want = naive_psd(&x, taper.weights(), pad, fs);
        let scale = want.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let dev = got
            .power()
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev / scale);
    }
    Ok((
        worst <= 1e-9,
        format!("max relative deviation {worst:.2e} over 200 inputs"),
    ))
}

fn axis_freq(i: usize, n: usize) -> f64 {
    let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * PI * k / n as f64
}

fn grating(n: usize, kx: usize, shift: f64) -> Vec<f64> {
    (0..n * n)
        .map(|i| 0.5 + 0.4 * (2.0 * PI * kx as f64 * ((i % n) as f64 - shift) / n as f64).cos())
        .collect()
}

fn steerable_bank() -> Outcome {
    let mut tiling = true;
    let mut paired = true;
    let mut half_plane = true;
    let mut worst_phase: f64 = 0.0;
    let mut ranges = Vec::new();
    for n in [32, 64, 128] {
        let bank = build_filter_bank::<f64>(n, n, 3, 4)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &e in bank.energy().iter().skip(1) {
            lo = lo.min(e);
            hi = hi.max(e);
            tiling &= (0.999..=1.001).contains(&e);
        }
        paired &= bank.paired_energy().iter().skip(1).all(|e| (e - 1.0).abs() <= 1e-3);
        ranges.push(format!("{n}: [{lo:.3}, {hi:.3}]"));

        for band in bank.bands() {
            let (c, s) = (band.theta.cos(), band.theta.sin());
            for y in 0..n {
                for x in 0..n {
                    let dot = axis_freq(x, n) * c + axis_freq(y, n) * s;
                    if dot < -1e-12 && band.mask[y * n + x] != 0.0 {
                        half_plane = false;
                    }
                }
            }
        }

        for (kx, band) in [(n / 4, 0usize), (n / 8, 4)] {
            let base = &decompose(&grating(n, kx, 0.0), &bank)?[band];
            let amp = base.amplitude();
            let max = amp.iter().cloned().fold(0.0, f64::max);
            for shift in [0.37, 1.0, 2.5] {
                let moved = &decompose(&grating(n, kx, shift), &bank)?[band];
                let want = -2.0 * PI * kx as f64 * shift / n as f64;
                for ((pa, pb), &m) in base.phase().iter().zip(moved.phase()).zip(&amp) {
                    if m > 0.1 * max {
                        let d = (pb - pa - want).rem_euclid(2.0 * PI);
                        worst_phase = worst_phase.max(d.min(2.0 * PI - d));
                    }
                }
            }
        }
    }
    let ok = tiling && half_plane && worst_phase <= 1e-3;
    Ok((
        ok,
        format!(
            "sum |mask|^2 over non-DC bins {} (in [0.999, 1.001]: {tiling}); conjugate-paired sum within 1e-3: {paired}; \
             half-plane zero: {half_plane}; shift-to-phase max error {worst_phase:.2e} rad",
            ranges.join(", ")
        ),
    ))
}

fn averaged_periodicity(chain: &SpectralChain<f64>, mut x: Vec<f64>, k: f64) -> Result<bool, tremor_core::Error> {
    chain.bandpass(&mut x);
    let avg = average_psds(&chain.series_window_psds(&x)?)?;
    Ok(periodicity_test(&avg, k).is_periodic)
}

fn gating_calibration() -> Outcome {
    let cfg = AnalysisConfig::default();
    let chain = SpectralChain::<f64>::new(&cfg, 600)?;
    let normal = Normal::new(0.0, 1.0)?;
    let mut false_pos = 0;
    let mut detected = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..600).map(|_| normal.sample(&mut rng)).collect();
        if averaged_periodicity(&chain, noise, cfg.k_sigma)? {
            false_pos += 1;
        }
        let f = rng.random_range(2.0..10.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let tone: Vec<f64> = (0..600)
            .map(|i| (2.0 * PI * f * i as f64 / 30.0 + phase).sin())
            .collect();
        if averaged_periodicity(&chain, tone, cfg.k_sigma)? {
            detected += 1;
        }
    }
    let ok = false_pos <= 10 && detected == 100;
    Ok((
        ok,
        format!("white-noise false positives {false_pos}/100 (need <= 10); sinusoids detected {detected}/100"),
    ))
}

fn cli(args: &[&str]) -> Result<(), Box<dyn std::error::Error>> {
    let out = Command::new(env!("CARGO_BIN_EXE_tremor")).args(args).output()?;
    if !out.status.success() {
        return Err(format!(
            "tremor {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
        .into());
    }
    Ok(())
}

fn cli_case(root: &Path, spec_text: &str) -> Result<(), Box<dyn std::error::Error>> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let case = root.join("case");
    fs::create_dir_all(case.join("results"))?;
    fs::write(root.join("spec.toml"), spec_text)?;
    let (frames, traj, accel) = (case.join("frames"), case.join("trajectory.csv"), case.join("accel.csv"));
    cli(&[
        "synth",
        "--spec",
        &s(&root.join("spec.toml")),
        "--out-frames",
        &s(&frames),
        "--out-trajectory",
        &s(&traj),
        "--out-accel",
        &s(&accel),
    ])?;
    for v in MethodVariant::ALL {
        let out = case.join("results").join(format!("{v}.json"));
        cli(&[
            "analyze",
            "--frames",
            &s(&frames),
            "--trajectory",
            &s(&traj),
            "--variant",
            v.name(),
            "--out",
            &s(&out),
        ])?;
    }
    cli(&[
        "gt",
        "--accel",
        &s(&accel),
        "--out",
        &s(&case.join("truth.json")),
        "--task",
        "synthetic",
    ])?;
    cli(&[
        "eval",
        "--results",
        &format!("{}/*.json", s(&case.join("results"))),
        "--truths",
        &s(&case.join("truth.json")),
        "--out",
        &s(&case.join("report.json")),
    ])?;
    Ok(())
}

const CASE_SPEC: &str = "\
tremor_freq = 5.5
tremor_amp = 1.2
tremor_axis = [1.0, 0.5]
noise_std = 0.2
accel_noise_std = 0.5
seed = 11
";

fn end_to_end_determinism() -> Outcome {
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    for d in &dirs {
        cli_case(d.path(), CASE_SPEC)?;
    }
    let case = dirs[0].path().join("case");

    let spec: SynthSpec = io::load_spec(&dirs[0].path().join("spec.toml"))?;
    let cfg = AnalysisConfig::default();
    let (traj, _) = gen_trajectory::<f64>(&spec)?;
    let frames = render_frames(&clean_trajectory::<f64>(&spec)?, &spec)?.quantized(65535);
    let mut variants = MethodVariant::ALL.to_vec();
    variants.sort_by_key(|v| format!("{v}.json"));
    let mut mismatches = Vec::new();
    let mut results = Vec::new();
    for v in variants {
        let mut r = run_variant(v, Some(&frames), &traj, &cfg)?;
        r.video_id = Some("case".into());
        let file: VideoResult = io::read_json(&case.join("results").join(format!("{v}.json")))?;
        if file != r || serde_json::to_string(&file)? != serde_json::to_string(&r)? {
            mismatches.push(v.name().to_string());
        }
        results.push(r);
    }
    let g = ground_truth_frequency(&gen_accelerometer::<f64>(&spec)?, &cfg)?;
    let truth = TruthRecord {
        video_id: "case".into(),
        task: Some("synthetic".into()),
        periodic: g.periodic,
        f_gt: g.f_gt,
    };
    if io::read_json::<TruthRecord>(&case.join("truth.json"))? != truth {
        mismatches.push("truth".into());
    }
    let report = evaluate(&join_results(&results, &[truth])?, 1.0)?;
    if io::read_json::<EvalReport>(&case.join("report.json"))? != report {
        mismatches.push("report".into());
    }

    let mut differing = Vec::new();
    let mut files = vec![
        "trajectory.csv".to_string(),
        "accel.csv".into(),
        "truth.json".into(),
        "report.json".into(),
    ];
    for v in MethodVariant::ALL {
        files.push(format!("results/{v}.json"));
    }
    for entry in fs::read_dir(case.join("frames"))? {
        files.push(format!("frames/{}", entry?.file_name().to_string_lossy()));
    }
    for f in &files {
        if fs::read(case.join(f))? != fs::read(dirs[1].path().join("case").join(f))? {
            differing.push(f.clone());
        }
    }
    let ok = mismatches.is_empty() && differing.is_empty();
    Ok((
        ok,
        format!(
            "in-memory mismatches: {mismatches:?}; {} files compared across two runs, differing: {differing:?}",
            files.len()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("lagrangian frequency recovery", lagrangian_recovery),
        ("drift robustness of smoothing", drift_robustness),
        ("eulerian frequency recovery", eulerian_recovery),
        ("sub-pixel sensitivity of phase", subpixel_sensitivity),
        ("channel score hand example", score_example),
        ("tukey shape parameter", tukey_shape),
        ("band-pass filter correctness", filter_correctness),
        ("PSD oracle equivalence", oracle_equivalence),
        ("steerable bank structure", steerable_bank),
        ("periodicity gating calibration", gating_calibration),
        ("end-to-end CLI determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
