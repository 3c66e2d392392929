//! On-disk formats: graymap frame directories, trajectory and accelerometer
//! CSV, TOML config/spec files and JSON reports.
//!
//! Every writer goes through [`atomic_write`], so readers never observe a
//! partially written file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{AnalysisConfig, FrameStack, Point2, TimeSeries1D, Trajectory2D};
use crate::synth::SynthSpec;

/// Sidecar in a frame directory holding the frame rate in Hz.
pub const FRAME_RATE_FILE: &str = "frame_rate.txt";
pub const TRAJECTORY_HEADER: [&str; 4] = ["frame", "x", "y", "valid"];
pub const ACCEL_HEADER: [&str; 4] = ["t", "ax", "ay", "az"];
/// Largest allowed distance of an accelerometer timestamp from the uniform
/// grid, as a fraction of the sampling interval.
pub const MAX_GRID_DEVIATION: f64 = 0.01;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// A decoded graymap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .filter(|s| !s.is_empty())
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let t = self.token().ok_or_else(|| format!("missing {what}"))?;
        t.parse().map_err(|_| format!("bad {what} '{t}'"))
    }
}

/// Parses binary (`P5`) or plain (`P2`) graymap bytes.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Graymap, String> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token().ok_or("empty file")?.to_string();
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if !(1..=65535).contains(&maxval) {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let maxval = maxval as u16;
    let n = width * height;
    let pixels: Vec<u16> = match magic.as_str() {
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = h.pos + 1;
            let wide = maxval > 255;
            let need = n * if wide { 2 } else { 1 };
            let raster = bytes
                .get(start..start + need)
                .ok_or_else(|| format!("raster truncated: need {need} bytes"))?;
            if wide {
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            } else {
                raster.iter().map(|&b| b as u16).collect()
            }
        }
        "P2" => (0..n)
            .map(|_| {
                h.number("pixel")
                    .and_then(|v| u16::try_from(v).map_err(|_| format!("pixel {v} too large")))
            })
            .collect::<std::result::Result<_, _>>()?,
        other => return Err(format!("unsupported magic '{other}'")),
    };
    if let Some(v) = pixels.iter().find(|&&v| v > maxval) {
        return Err(format!("pixel {v} exceeds maxval {maxval}"));
    }
    Ok(Graymap {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Binary graymap bytes; 16-bit samples are big-endian.
pub fn encode_pgm(img: &Graymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for &v in &img.pixels {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&v| v as u8));
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Graymap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|m| Error::format(path, m))
}

pub fn read_frame_rate(dir: &Path) -> Result<f64> {
    let path = dir.join(FRAME_RATE_FILE);
    let text = read_text(&path)?;
    let rate: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::format(&path, format!("bad frame rate '{}'", text.trim())))?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::format(&path, format!("frame rate must be > 0, got {rate}")));
    }
    Ok(rate)
}

/// Graymap files of `dir` in lexicographic name order.
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Loads a frame directory, scaling each file by its own maxval.
pub fn load_frames<T: Real>(dir: &Path) -> Result<FrameStack<T>> {
    let rate = read_frame_rate(dir)?;
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::format(dir, "no .pgm frames"));
    }
    let mut data = Vec::new();
    let mut dims = None;
    for f in &files {
        let img = read_pgm(f)?;
        match dims {
            None => dims = Some((img.height, img.width)),
            Some(d) if d != (img.height, img.width) => {
                return Err(Error::format(
                    f,
                    format!(
                        "frame is {}x{}, earlier frames are {}x{}",
                        img.width, img.height, d.1, d.0
                    ),
                ));
            }
            _ => {}
        }
        let m = T::from_u16(img.maxval).expect("u16 fits");
        data.extend(img.pixels.iter().map(|&v| T::from_u16(v).expect("u16 fits") / m));
    }
    let (h, w) = dims.expect("at least one frame");
    FrameStack::new(data, files.len(), h, w, T::lit(rate))
}

/// Writes `frame_00000.pgm`, ... and the frame-rate sidecar. Intensities are
/// rounded onto the `k / maxval` grid.
pub fn write_frames<T: Real>(dir: &Path, frames: &FrameStack<T>, maxval: u16) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = maxval as f64;
    for t in 0..frames.len() {
        let pixels = frames
            .frame(t)
            .iter()
            .map(|&v| (v.as_f64() * m).round() as u16)
            .collect();
        let img = Graymap {
            width: frames.width(),
            height: frames.height(),
            maxval,
            pixels,
        };
        atomic_write(&dir.join(format!("frame_{t:05}.pgm")), &encode_pgm(&img))?;
    }
    atomic_write(
        &dir.join(FRAME_RATE_FILE),
        format!("{}\n", frames.frame_rate().as_f64()).as_bytes(),
    )
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

fn check_header(path: &Path, rdr: &mut csv::Reader<fs::File>, want: &[&str]) -> Result<()> {
    let got = rdr.headers().map_err(|e| csv_error(path, e))?;
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got != want {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header '{}', found '{}'", want.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        })
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, path: &Path, line: u64) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("missing column {}", i + 1),
    })
}

fn parse_num<N: std::str::FromStr>(s: &str, what: &str, path: &Path, line: u64) -> Result<N> {
    s.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad {what} '{s}'"),
    })
}

fn parse_flag(s: &str, path: &Path, line: u64) -> Result<bool> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("bad valid flag '{s}'"),
        }),
    }
}

/// Reads `frame,x,y,valid` rows into a dense track starting at frame 0.
/// Frames without a row are marked invalid.
pub fn load_trajectory<T: Real>(path: &Path, frame_rate: f64) -> Result<Trajectory2D<T>> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &TRAJECTORY_HEADER)?;
    let mut points: Vec<Point2<T>> = Vec::new();
    let mut valid: Vec<bool> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let frame: usize = parse_num(field(&rec, 0, path, line)?, "frame index", path, line)?;
        let x: f64 = parse_num(field(&rec, 1, path, line)?, "x", path, line)?;
        let y: f64 = parse_num(field(&rec, 2, path, line)?, "y", path, line)?;
        let ok = parse_flag(field(&rec, 3, path, line)?, path, line)?;
        if frame < points.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("frame index {frame} not increasing"),
            });
        }
        while points.len() < frame {
            points.push(Point2::default());
            valid.push(false);
        }
        points.push(Point2::new(T::lit(x), T::lit(y)));
        valid.push(ok && x.is_finite() && y.is_finite());
    }
    if points.is_empty() {
        return Err(Error::format(path, "no trajectory rows"));
    }
    Trajectory2D::new(points, valid, T::lit(frame_rate))
}

pub fn write_trajectory<T: Real>(path: &Path, traj: &Trajectory2D<T>) -> Result<()> {
    let mut out = String::from("frame,x,y,valid\n");
    for (i, (p, &v)) in traj.points().iter().zip(traj.valid_mask()).enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", p.x.as_f64(), p.y.as_f64(), u8::from(v)));
    }
    atomic_write(path, out.as_bytes())
}

/// Reads `t,ax,ay,az` rows. The rate is `(n - 1) / (t_last - t_first)`;
/// timestamps further than 1% of an interval from that grid are rejected.
pub fn load_accelerometer<T: Real>(path: &Path) -> Result<[TimeSeries1D<T>; 3]> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &ACCEL_HEADER)?;
    let (mut t, mut ax, mut ay, mut az) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let ti: f64 = parse_num(field(&rec, 0, path, line)?, "t", path, line)?;
        if let Some(&prev) = t.last() {
            if !(ti > prev) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("timestamp {ti} not increasing"),
                });
            }
        }
        t.push(ti);
        for (i, dst) in [&mut ax, &mut ay, &mut az].into_iter().enumerate() {
            let v: f64 = parse_num(field(&rec, i + 1, path, line)?, ACCEL_HEADER[i + 1], path, line)?;
            dst.push(T::lit(v));
        }
    }
    if t.len() < 2 {
        return Err(Error::format(path, "need at least two accelerometer rows"));
    }
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let rate = T::lit(snap_rate((n - 1) as f64 / (t[n - 1] - t[0])));
    let deviation = t
        .iter()
        .enumerate()
        .map(|(i, &ti)| (ti - (t[0] + i as f64 * dt)).abs() / dt)
        .fold(0.0, f64::max);
    if deviation > MAX_GRID_DEVIATION {
        return Err(Error::NonUniformSampling {
            path: path.to_path_buf(),
            deviation: 100.0 * deviation,
        });
    }
    Ok([
        TimeSeries1D::new(ax, rate)?,
        TimeSeries1D::new(ay, rate)?,
        TimeSeries1D::new(az, rate)?,
    ])
}

/// Decimal timestamps rarely difference to exact multiples of the interval,
/// so a rate within 1e-9 (relative) of a whole number of micro-hertz is
/// taken to be that value.
fn snap_rate(raw: f64) -> f64 {
    let snapped = (raw * 1e6).round() / 1e6;
    if (snapped - raw).abs() <= 1e-9 * raw {
        snapped
    } else {
        raw
    }
}

/// Writes the three axes with timestamps `i / rate`.
pub fn write_accelerometer<T: Real>(path: &Path, accel: &[TimeSeries1D<T>; 3]) -> Result<()> {
    let n = accel[0].len();
    if accel.iter().any(|s| s.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: accel.iter().map(|s| s.len()).find(|&l| l != n).unwrap_or(n),
        });
    }
    let rate = accel[0].sample_rate().as_f64();
    let mut out = String::from("t,ax,ay,az\n");
    for i in 0..n {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i as f64 / rate,
            accel[0].samples()[i].as_f64(),
            accel[1].samples()[i].as_f64(),
            accel[2].samples()[i].as_f64()
        ));
    }
    atomic_write(path, out.as_bytes())
}

fn load_toml<V: DeserializeOwned>(path: &Path) -> Result<V> {
    toml::from_str(&read_text(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Flat `key = value` config; missing keys take their defaults.
pub fn load_config(path: &Path) -> Result<AnalysisConfig> {
    let cfg: AnalysisConfig = load_toml(path)?;
    cfg.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(cfg)
}

pub fn load_spec(path: &Path) -> Result<SynthSpec> {
    let spec: SynthSpec = load_toml(path)?;
    spec.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(spec)
}

pub fn to_toml<V: Serialize>(value: &V) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Invariant(format!("TOML encoding: {e}")))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(format!("JSON encoding: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e.to_string()))
}
