//! Files and configuration: recording and dataset CSV, run configs, spectral
//! report CSV/SVG, and fresh-path artifact writing.
//!
//! Recording CSV:
//!
//! ```text
//! # slipcal-recording v1
//! # fs_hz=1000
//! # channels=3
//! # scenario=slip
//! # material=pvc
//! # speed_mm_s=25
//! # sensor_id=s0
//! # finger=index
//! index,ch0,ch1,ch2
//! 0,1.0000000000000000e0,...
//! ```
//!
//! Samples use 17 significant digits, so write/read is exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::balance::{
    BalanceError, BalancePlan, Finger, Label, LabeledWindow, Material, Provenance, Recording, Scenario,
    WindowedDataset,
};
use crate::eval::EvalReport;
use crate::lstm::TrainConfig;
use crate::seed::{derive_seed, fnv1a};
use crate::signal::SampleVector;
use crate::spectral::{SignificanceConfig, SpectralReport};
use crate::synth::{default_profiles, MaterialProfile, SensorProfile, SynthConfig};

pub const RECORDING_MAGIC: &str = "# slipcal-recording v1";
pub const DATASET_MAGIC: &str = "# slipcal-dataset v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("{0} already exists (pass --overwrite to replace it)")]
    Exists(String),
    #[error("config: {0}")]
    Config(String),
}

impl From<BalanceError> for IoError {
    fn from(e: BalanceError) -> Self {
        IoError::Invariant(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Opens `path` for writing; refuses to replace an existing file unless
/// `overwrite`. Parent directories are created.
pub fn create_fresh(path: &Path, overwrite: bool) -> Result<BufWriter<File>, IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut opts = OpenOptions::new();
    opts.write(true);
    if overwrite {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    match opts.open(path) {
        Ok(f) => Ok(BufWriter::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(IoError::Exists(path.display().to_string())),
        Err(e) => Err(io_err(path)(e)),
    }
}

/// Writes a whole text artifact to a fresh path.
pub fn write_text(path: &Path, text: &str, overwrite: bool) -> Result<(), IoError> {
    let mut w = create_fresh(path, overwrite)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

struct Cursor<'a> {
    path: &'a str,
    line: usize,
}

impl Cursor<'_> {
    fn err(&self, column: usize, msg: impl Into<String>) -> IoError {
        IoError::Parse {
            path: self.path.to_string(),
            line: self.line,
            column,
            msg: msg.into(),
        }
    }
}

pub fn format_recording(rec: &Recording) -> String {
    let p = rec.provenance();
    let m = rec.channels();
    let mut s = String::with_capacity(rec.len() * m * 26);
    s.push_str(RECORDING_MAGIC);
    s.push('\n');
    let _ = writeln!(s, "# fs_hz={}", rec.sampling_rate_hz());
    let _ = writeln!(s, "# channels={m}");
    let _ = writeln!(s, "# scenario={}", p.scenario);
    let _ = writeln!(s, "# material={}", p.material);
    let _ = writeln!(s, "# speed_mm_s={}", p.speed_mm_s);
    let _ = writeln!(s, "# sensor_id={}", p.sensor_id);
    let _ = writeln!(s, "# finger={}", p.finger);
    s.push_str("index");
    for c in 0..m {
        let _ = write!(s, ",ch{c}");
    }
    s.push('\n');
    for f in rec.frames() {
        let _ = write!(s, "{}", f.timestamp_index);
        for v in &f.values {
            let _ = write!(s, ",{v:.16e}");
        }
        s.push('\n');
    }
    s
}

pub fn write_recording(rec: &Recording, path: &Path, overwrite: bool) -> Result<(), IoError> {
    if rec.is_empty() {
        return Err(IoError::Invariant("recording has no frames".into()));
    }
    write_text(path, &format_recording(rec), overwrite)
}

pub fn read_recording(path: &Path) -> Result<Recording, IoError> {
    let f = File::open(path).map_err(io_err(path))?;
    parse_recording(BufReader::new(f), &path.display().to_string())
}

/// Parses a recording CSV; `origin` names the source in errors.
pub fn parse_recording<R: BufRead>(input: R, origin: &str) -> Result<Recording, IoError> {
    let mut cur = Cursor { path: origin, line: 0 };
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut frames: Vec<SampleVector> = Vec::new();
    let mut channels: Option<usize> = None;
    let mut saw_magic = false;
    let mut saw_columns = false;
    for line in input.lines() {
        cur.line += 1;
        let line = line.map_err(io_err(Path::new(origin)))?;
        let line = line.trim_end();
        if cur.line == 1 {
            if line != RECORDING_MAGIC {
                return Err(cur.err(1, format!("expected '{RECORDING_MAGIC}'")));
            }
            saw_magic = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !saw_columns {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.first() != Some(&"index") {
                return Err(cur.err(1, "expected column header starting with 'index'"));
            }
            for (c, name) in cols.iter().enumerate().skip(1) {
                if *name != format!("ch{}", c - 1) {
                    return Err(cur.err(c + 1, format!("expected column 'ch{}', found '{name}'", c - 1)));
                }
            }
            channels = Some(cols.len() - 1);
            saw_columns = true;
            continue;
        }
        let m = channels.expect("set with column header");
        let mut fields = line.split(',');
        let idx_text = fields.next().unwrap_or("");
        let index: u64 = idx_text
            .trim()
            .parse()
            .map_err(|_| cur.err(1, format!("row index '{idx_text}' is not a non-negative integer")))?;
        if let Some(prev) = frames.last() {
            if index <= prev.timestamp_index {
                return Err(cur.err(1, format!("index {index} does not increase")));
            }
        }
        let mut values = Vec::with_capacity(m);
        for (c, text) in fields.enumerate() {
            let v: f64 = text
                .trim()
                .parse()
                .map_err(|_| cur.err(c + 2, format!("cell '{text}' is not a number")))?;
            values.push(v);
        }
        if values.len() != m {
            return Err(cur.err(values.len() + 2, format!("expected {m} channel values, found {}", values.len())));
        }
        frames.push(SampleVector::new(values, index));
    }
    if !saw_magic {
        return Err(cur.err(1, "empty file"));
    }
    if !saw_columns {
        return Err(cur.err(1, "missing column header"));
    }
    let get = |k: &str| -> Result<&str, IoError> {
        header
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| IoError::Parse {
                path: origin.to_string(),
                line: 1,
                column: 1,
                msg: format!("header field '{k}' missing"),
            })
    };
    let bad = |k: &str, e: String| IoError::Parse {
        path: origin.to_string(),
        line: 1,
        column: 1,
        msg: format!("header field '{k}': {e}"),
    };
    let fs: f64 = get("fs_hz")?.parse().map_err(|e| bad("fs_hz", format!("{e}")))?;
    let declared: usize = get("channels")?.parse().map_err(|e| bad("channels", format!("{e}")))?;
    if Some(declared) != channels {
        return Err(bad("channels", format!("declares {declared}, columns give {}", channels.unwrap_or(0))));
    }
    let scenario = Scenario::from_str(get("scenario")?).map_err(|e| bad("scenario", e))?;
    let material = Material::from_str(get("material")?).map_err(|e| bad("material", e))?;
    let speed: u32 = get("speed_mm_s")?.parse().map_err(|e| bad("speed_mm_s", format!("{e}")))?;
    let finger = Finger::from_str(get("finger")?).map_err(|e| bad("finger", e))?;
    let sensor = get("sensor_id")?.to_string();
    if frames.len() < 2 {
        return Err(IoError::Invariant(format!("{origin}: {} rows, need at least 2", frames.len())));
    }
    Ok(Recording::new(frames, fs, scenario, material, speed, sensor, finger)?)
}

/// Recording files in a directory (`*.csv`, sorted) or the file itself.
pub fn recording_paths(path: &Path) -> Result<Vec<PathBuf>, IoError> {
    if path.is_dir() {
        let mut out: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        out.sort();
        Ok(out)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

pub fn read_recordings(paths: &[PathBuf]) -> Result<Vec<Recording>, IoError> {
    let mut out = Vec::new();
    for p in paths {
        for f in recording_paths(p)? {
            out.push(read_recording(&f)?);
        }
    }
    if out.is_empty() {
        return Err(IoError::Invariant("no recordings found".into()));
    }
    Ok(out)
}

/// Canonical file name for a recording.
pub fn recording_file_name(rec: &Recording) -> String {
    let p = rec.provenance();
    format!(
        "{}_{}_{}_{}_{}.csv",
        p.sensor_id, p.finger, p.scenario, p.material, p.speed_mm_s
    )
}

/// Windowed dataset as CSV: one window per row.
pub fn format_dataset(ds: &WindowedDataset, config_fingerprint: u64) -> String {
    let mut s = String::new();
    s.push_str(DATASET_MAGIC);
    s.push('\n');
    let _ = writeln!(s, "# seed={}", ds.seed);
    let _ = writeln!(s, "# config={config_fingerprint:016x}");
    let _ = writeln!(s, "# window_size={}", ds.window_size);
    let _ = writeln!(s, "# fs_hz={}", ds.sampling_rate_hz);
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(s, "# materials={}", join(ds.plan.materials.iter().map(|m| m.to_string()).collect()));
    let _ = writeln!(s, "# slip_speeds={}", join(ds.plan.slip_speeds.iter().map(|m| m.to_string()).collect()));
    let _ = writeln!(s, "# free_speeds={}", join(ds.plan.free_speeds.iter().map(|m| m.to_string()).collect()));
    s.push_str("label,scenario,material,speed_mm_s,sensor_id,finger");
    for i in 0..ds.window_size {
        let _ = write!(s, ",s{i}");
    }
    s.push('\n');
    for w in &ds.windows {
        let p = &w.provenance;
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            w.label, p.scenario, p.material, p.speed_mm_s, p.sensor_id, p.finger
        );
        for v in &w.samples {
            let _ = write!(s, ",{v:.16e}");
        }
        s.push('\n');
    }
    s
}

pub fn read_dataset(path: &Path) -> Result<WindowedDataset, IoError> {
    let f = File::open(path).map_err(io_err(path))?;
    parse_dataset(BufReader::new(f), &path.display().to_string())
}

pub fn parse_dataset<R: BufRead>(input: R, origin: &str) -> Result<WindowedDataset, IoError> {
    let mut cur = Cursor { path: origin, line: 0 };
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut windows = Vec::new();
    let mut width: Option<usize> = None;
    for line in input.lines() {
        cur.line += 1;
        let line = line.map_err(io_err(Path::new(origin)))?;
        let line = line.trim_end();
        if cur.line == 1 && line != DATASET_MAGIC {
            return Err(cur.err(1, format!("expected '{DATASET_MAGIC}'")));
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if width.is_none() {
            let cols = line.split(',').count();
            if cols < 7 || !line.starts_with("label,") {
                return Err(cur.err(1, "expected dataset column header"));
            }
            width = Some(cols - 6);
            continue;
        }
        let w = width.expect("set");
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != w + 6 {
            return Err(cur.err(f.len().min(w + 6), format!("expected {} fields, found {}", w + 6, f.len())));
        }
        let label = Label::from_str(f[0]).map_err(|e| cur.err(1, e))?;
        let scenario = Scenario::from_str(f[1]).map_err(|e| cur.err(2, e))?;
        let material = Material::from_str(f[2]).map_err(|e| cur.err(3, e))?;
        let speed: u32 = f[3].parse().map_err(|_| cur.err(4, format!("speed '{}'", f[3])))?;
        let finger = Finger::from_str(f[5]).map_err(|e| cur.err(6, e))?;
        if scenario.label() != label {
            return Err(cur.err(1, format!("label {label} contradicts scenario {scenario}")));
        }
        let mut samples = Vec::with_capacity(w);
        for (i, t) in f[6..].iter().enumerate() {
            samples.push(t.parse::<f64>().map_err(|_| cur.err(i + 7, format!("cell '{t}' is not a number")))?);
        }
        windows.push(LabeledWindow {
            samples,
            label,
            provenance: Provenance {
                scenario,
                material,
                speed_mm_s: speed,
                sensor_id: f[4].to_string(),
                finger,
            },
        });
    }
    let window_size = width.ok_or_else(|| cur.err(1, "missing column header"))?;
    let num = |k: &str| -> Result<f64, IoError> {
        header
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| IoError::Invariant(format!("{origin}: header field '{k}' missing or invalid")))
    };
    let fs = num("fs_hz")?;
    let seed = num("seed")? as u64;
    let list = |k: &str| header.get(k).map(|v| v.split_whitespace().map(str::to_string).collect::<Vec<_>>());
    let plan = BalancePlan {
        materials: list("materials")
            .unwrap_or_default()
            .iter()
            .map(|m| Material::from_str(m))
            .collect::<Result<_, _>>()
            .map_err(IoError::Invariant)?,
        slip_speeds: list("slip_speeds")
            .unwrap_or_default()
            .iter()
            .map(|v| v.parse().map_err(|_| IoError::Invariant(format!("slip speed '{v}'"))))
            .collect::<Result<_, _>>()?,
        free_speeds: list("free_speeds")
            .unwrap_or_default()
            .iter()
            .map(|v| v.parse().map_err(|_| IoError::Invariant(format!("free speed '{v}'"))))
            .collect::<Result<_, _>>()?,
    };
    Ok(WindowedDataset::from_windows(windows, window_size, fs, plan, seed))
}

/// Evaluation report CSV: summary metrics, then per-cell accuracy.
pub fn format_eval_report(r: &EvalReport, seed: u64, config_fingerprint: u64) -> String {
    let mut s = String::new();
    s.push_str("# slipcal eval report\n");
    let _ = writeln!(s, "# seed={seed} config={config_fingerprint:016x}");
    s.push_str("cell,correct,total,accuracy\n");
    let c = r.confusion;
    let _ = writeln!(s, "all,{},{},{:.6}", c.tp + c.tn, c.total(), r.accuracy);
    let _ = writeln!(s, "slip,{},{},{:.6}", c.tp, c.tp + c.fn_, r.tp_rate);
    let _ = writeln!(s, "nonslip,{},{},{:.6}", c.tn, c.tn + c.fp, r.tn_rate);
    for (k, (ok, n)) in &r.factor_breakdown {
        let _ = writeln!(s, "{k},{ok},{n},{:.6}", *ok as f64 / *n as f64);
    }
    s
}

/// Spectral report CSV: one row per (bin, class).
pub fn format_spectral_report(r: &SpectralReport, config_fingerprint: u64) -> String {
    let mut s = String::new();
    s.push_str("# slipcal spectral report\n");
    let _ = writeln!(s, "# seed={} config={config_fingerprint:016x}", r.seed);
    let _ = writeln!(
        s,
        "# sequence_length={} n_bootstrap={} n_repetitions={}",
        r.sequence_length, r.n_bootstrap, r.n_repetitions
    );
    s.push_str("frequency_hz,class,mean,lo95,hi95,significance\n");
    for k in 0..r.bins() {
        let f = k as f64 * r.resolution_hz;
        for (name, b) in [("nonslip", &r.nonslip), ("slip", &r.slip)] {
            let _ = writeln!(
                s,
                "{f:.6},{name},{:.9e},{:.9e},{:.9e},{:.6}",
                b.mean[k], b.lo95[k], b.hi95[k], r.significance[k]
            );
        }
    }
    s
}

/// Two-panel SVG: class mean amplitudes with 95 % bands, and the per-bin
/// fraction of rejecting repetitions.
pub fn spectral_svg(r: &SpectralReport) -> String {
    let (w, h, pad) = (800.0, 300.0, 40.0);
    let n = r.bins().max(2);
    let x = |k: usize| pad + (w - 2.0 * pad) * k as f64 / (n - 1) as f64;
    let top = r
        .nonslip
        .hi95
        .iter()
        .chain(&r.slip.hi95)
        .cloned()
        .fold(f64::MIN_POSITIVE, f64::max);
    let y_amp = |v: f64| pad + (h - 2.0 * pad) * (1.0 - v / top);
    let y_sig = |v: f64| h + pad + (h - 2.0 * pad) * (1.0 - v);
    let poly = |pts: Vec<(f64, f64)>| -> String {
        pts.iter()
            .map(|(a, b)| format!("{a:.2},{b:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * h
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (name, b, color) in [("non-slip", &r.nonslip, "#1f77b4"), ("slip", &r.slip, "#d62728")] {
        let mut band: Vec<(f64, f64)> = (0..r.bins()).map(|k| (x(k), y_amp(b.hi95[k]))).collect();
        band.extend((0..r.bins()).rev().map(|k| (x(k), y_amp(b.lo95[k]))));
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2"/>"#, poly(band));
        let mean: Vec<(f64, f64)> = (0..r.bins()).map(|k| (x(k), y_amp(b.mean[k]))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}"><title>{name}</title></polyline>"#,
            poly(mean)
        );
    }
    let sig: Vec<(f64, f64)> = (0..r.bins()).map(|k| (x(k), y_sig(r.significance[k]))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black"/>"#, poly(sig));
    let nyq = (r.bins() - 1) as f64 * r.resolution_hz;
    let _ = writeln!(s, r#"<text x="{pad}" y="{}">amplitude (blue non-slip, red slip)</text>"#, pad - 10.0);
    let _ = writeln!(s, r#"<text x="{pad}" y="{}">fraction of repetitions rejecting</text>"#, h + pad - 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{nyq} Hz</text>"#, w - pad, 2.0 * h - 10.0);
    let _ = writeln!(s, r#"<text x="{pad}" y="{}">0 Hz</text>"#, 2.0 * h - 10.0);
    s.push_str("</svg>\n");
    s
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub window_size: usize,
    pub output_dir: Option<PathBuf>,
    /// Recording files or directories.
    pub data: Vec<PathBuf>,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub synth_materials: Vec<MaterialProfile>,
    pub synth_sensors: Vec<SensorProfile>,
    pub sweep: SweepSettings,
    pub spectral: SignificanceConfig,
    /// Significance level that marks a bin as part of the band.
    pub band_threshold: f64,
    fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub window_sizes: Vec<usize>,
    pub factors: Vec<usize>,
    pub base_window: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            window_sizes: vec![5, 10, 25, 50, 100, 200],
            factors: vec![2, 4, 8, 16, 32],
            base_window: 200,
        }
    }
}

impl RunConfig {
    /// Defaults with an explicit seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            window_size: 50,
            output_dir: None,
            data: Vec::new(),
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            synth_materials: default_profiles(),
            synth_sensors: vec![SensorProfile::new("s0", Finger::Index, 1.0)],
            sweep: SweepSettings::default(),
            spectral: SignificanceConfig::default(),
            band_threshold: 0.95,
            fingerprint: fnv1a(format!("seed={seed}").as_bytes()),
        }
    }

    /// Hash of the normalized key = value pairs.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Training settings with the seed derived from the root seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, "train", &[]),
            ..self.train.clone()
        }
    }

    pub fn eval_config(&self) -> crate::eval::EvalConfig {
        crate::eval::EvalConfig {
            window_size: self.window_size,
            train: self.train.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(IoError::Config(format!("line {}: expected 'key = value'", i + 1)));
            };
            let k = k.trim().to_string();
            if pairs.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(IoError::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        let seed_text = pairs
            .get("seed")
            .ok_or_else(|| IoError::Config("'seed' is required".into()))?
            .1
            .clone();
        let seed: u64 = seed_text
            .parse()
            .map_err(|_| IoError::Config(format!("seed '{seed_text}' is not an unsigned integer")))?;
        let mut cfg = Self::with_seed(seed);
        let canonical: String = pairs.iter().map(|(k, (_, v))| format!("{k}={v}\n")).collect();
        cfg.fingerprint = fnv1a(canonical.as_bytes());

        let mut material_overrides: BTreeMap<Material, Vec<(String, usize, String)>> = BTreeMap::new();
        let mut material_subset: Option<Vec<Material>> = None;
        for (key, (line, value)) in &pairs {
            let at = |msg: String| IoError::Config(format!("line {line}: {key}: {msg}"));
            let v = value.as_str();
            match key.as_str() {
                "seed" => {}
                "window_size" => cfg.window_size = num(v).map_err(at)?,
                "output_dir" => cfg.output_dir = Some(PathBuf::from(v)),
                "data" => cfg.data = list(v).map(PathBuf::from).collect(),
                "train.hidden_size" => cfg.train.hidden_size = num(v).map_err(at)?,
                "train.momentum" => cfg.train.momentum = num(v).map_err(at)?,
                "train.lr_schedule" => cfg.train.lr_schedule = nums(v).map_err(at)?,
                "train.max_epochs_per_stage" => cfg.train.max_epochs_per_stage = num(v).map_err(at)?,
                "train.patience_epochs" => cfg.train.patience_epochs = num(v).map_err(at)?,
                "train.progress_epsilon" => cfg.train.progress_epsilon = num(v).map_err(at)?,
                "train.batch_size" => cfg.train.batch_size = num(v).map_err(at)?,
                "train.init_scale" => cfg.train.init_scale = num(v).map_err(at)?,
                "train.forget_bias" => cfg.train.forget_bias = num(v).map_err(at)?,
                "train.clip_norm" => {
                    cfg.train.clip_norm = if v == "none" { None } else { Some(num(v).map_err(at)?) }
                }
                "synth.fs_hz" => cfg.synth.fs_hz = num(v).map_err(at)?,
                "synth.duration_s" => cfg.synth.duration_s = num(v).map_err(at)?,
                "synth.channels" => cfg.synth.channels = num(v).map_err(at)?,
                "synth.idle_vibration_hz" => cfg.synth.idle_vibration_hz = num(v).map_err(at)?,
                "synth.idle_gain" => cfg.synth.idle_gain = num(v).map_err(at)?,
                "synth.speed_amplitude_exponent" => cfg.synth.speed_amplitude_exponent = num(v).map_err(at)?,
                "synth.burst_amplitude" => cfg.synth.burst_amplitude = num(v).map_err(at)?,
                "synth.sensor_noise" => cfg.synth.sensor_noise = num(v).map_err(at)?,
                "synth.preload" => cfg.synth.preload = num(v).map_err(at)?,
                "synth.tap_rate_hz" => cfg.synth.tap_rate_hz = num(v).map_err(at)?,
                "synth.tap_gain" => cfg.synth.tap_gain = num(v).map_err(at)?,
                "synth.jitter_low" => cfg.synth.jitter_low = num(v).map_err(at)?,
                "synth.jitter_high" => cfg.synth.jitter_high = num(v).map_err(at)?,
                "synth.jitter_segment_s" => cfg.synth.jitter_segment_s = num(v).map_err(at)?,
                "synth.materials" => {
                    material_subset = Some(
                        list(v)
                            .map(Material::from_str)
                            .collect::<Result<_, _>>()
                            .map_err(at)?,
                    )
                }
                "synth.sensors" => cfg.synth_sensors = list(v).map(sensor).collect::<Result<_, _>>().map_err(at)?,
                "sweep.window_sizes" => cfg.sweep.window_sizes = nums(v).map_err(at)?,
                "sweep.factors" => cfg.sweep.factors = nums(v).map_err(at)?,
                "sweep.base_window" => cfg.sweep.base_window = num(v).map_err(at)?,
                "spectral.n_bootstrap" => cfg.spectral.n_bootstrap = num(v).map_err(at)?,
                "spectral.n_repetitions" => cfg.spectral.n_repetitions = num(v).map_err(at)?,
                "spectral.c_alpha" => cfg.spectral.c_alpha = num(v).map_err(at)?,
                "spectral.sequence_length" => {
                    cfg.spectral.sequence_length = if v == "auto" { None } else { Some(num(v).map_err(at)?) }
                }
                "spectral.band_threshold" => cfg.band_threshold = num(v).map_err(at)?,
                other => {
                    // synth.<material>.<field>
                    let parts: Vec<&str> = other.split('.').collect();
                    match parts.as_slice() {
                        ["synth", m, field] if Material::from_str(m).is_ok_and(|m| m != Material::None) => {
                            material_overrides.entry(Material::from_str(m).expect("checked")).or_default().push((
                                (*field).to_string(),
                                *line,
                                v.to_string(),
                            ));
                        }
                        _ => return Err(IoError::Config(format!("line {line}: unknown key '{other}'"))),
                    }
                }
            }
        }
        if let Some(sub) = material_subset {
            cfg.synth_materials.retain(|p| sub.contains(&p.material));
        }
        for (m, fields) in material_overrides {
            let Some(p) = cfg.synth_materials.iter_mut().find(|p| p.material == m) else {
                return Err(IoError::Config(format!("overrides for material {m}, which is not selected")));
            };
            for (field, line, v) in fields {
                let at = |msg: String| IoError::Config(format!("line {line}: synth.{m}.{field}: {msg}"));
                match field.as_str() {
                    "burst_rate_hz" => p.burst_rate_hz = num(&v).map_err(at)?,
                    "burst_center_hz" => p.burst_center_hz = num(&v).map_err(at)?,
                    "burst_bandwidth_hz" => p.burst_bandwidth_hz = num(&v).map_err(at)?,
                    "burst_gain" => p.burst_gain = num(&v).map_err(at)?,
                    "noise_floor" => p.noise_floor = num(&v).map_err(at)?,
                    _ => return Err(IoError::Config(format!("line {line}: unknown key 'synth.{m}.{field}'"))),
                }
            }
        }
        cfg.train.validate().map_err(|e| IoError::Config(e.to_string()))?;
        if cfg.window_size == 0 {
            return Err(IoError::Config("window_size must be positive".into()));
        }
        Ok(cfg)
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn num<N: FromStr>(v: &str) -> Result<N, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

fn nums<N: FromStr>(v: &str) -> Result<Vec<N>, String> {
    list(v).map(num).collect()
}

/// `id:finger:gain`
fn sensor(v: &str) -> Result<SensorProfile, String> {
    let parts: Vec<&str> = v.split(':').collect();
    let [id, finger, gain] = parts.as_slice() else {
        return Err(format!("sensor '{v}' must be id:finger:gain"));
    };
    Ok(SensorProfile::new(*id, Finger::from_str(finger)?, num(gain)?))
}

/// One-line corpus summary.
pub fn describe_corpus(recordings: &[Recording]) -> String {
    let mut ids = BTreeSet::new();
    let mut scen: BTreeMap<Scenario, usize> = BTreeMap::new();
    for r in recordings {
        ids.insert(r.provenance().sensor_id.clone());
        *scen.entry(r.provenance().scenario).or_default() += 1;
    }
    format!(
        "{} recordings ({} slip, {} push, {} free-space), sensors: {}",
        recordings.len(),
        scen.get(&Scenario::Slip).unwrap_or(&0),
        scen.get(&Scenario::Push).unwrap_or(&0),
        scen.get(&Scenario::FreeSpace).unwrap_or(&0),
        ids.into_iter().collect::<Vec<_>>().join(",")
    )
}
