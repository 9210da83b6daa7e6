//! Scoring and the measurement sweeps: window size, sampling rate, factor
//! exclusion and cross-sensor transfer.
//!
//! Every sweep row trains a fresh model from seeds derived from the root seed
//! and the row's setting, so rows are independent jobs and a sweep is a pure
//! function of `(recordings, config, seed)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::balance::{
    build_balanced_with, rebalance_dataset, split_train_test, BalanceError, BalancePlan, CellKey, Label,
    LabeledWindow, Material, Recording, Scenario, WindowedDataset, FREE_SPACE_SPEEDS, SLIP_SPEEDS,
};
use crate::baseline::{fit_threshold_model, BandEnergy, BaselineError, ThresholdModel};
use crate::lstm::{predict_window, train, LstmModel, TrainConfig, TrainError};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_for};
use crate::signal::UniSignal;
use crate::spectral::{most_significant_band, significance_analysis, SignificanceConfig, SpectralError, SpectralReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("model expects windows of {model}, test set has {test}")]
    WindowSizeMismatch { model: usize, test: usize },
    #[error("downsampling factor {0} is not a power of two")]
    InvalidFactor(usize),
    #[error("window of {window} samples is not divisible by factor {factor}")]
    IndivisibleWindow { window: usize, factor: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Anything that maps a raw window to a verdict.
pub trait Classifier: Sync {
    fn classify(&self, window: &[f64]) -> Label;
    /// Window length the classifier requires, if fixed.
    fn window_size(&self) -> Option<usize>;
}

impl<T: Real> Classifier for LstmModel<T> {
    fn classify(&self, window: &[f64]) -> Label {
        predict_window(self, window).label
    }

    fn window_size(&self) -> Option<usize> {
        self.window_size
    }
}

impl Classifier for ThresholdModel {
    fn classify(&self, window: &[f64]) -> Label {
        self.classify(window).expect("window length checked by evaluate")
    }

    fn window_size(&self) -> Option<usize> {
        Some(self.window_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    /// Slip called slip.
    pub tp: usize,
    /// Slip called non-slip.
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Slip, Label::Slip) => self.tp += 1,
            (Label::Slip, Label::NonSlip) => self.fn_ += 1,
            (Label::NonSlip, Label::NonSlip) => self.tn += 1,
            (Label::NonSlip, Label::Slip) => self.fp += 1,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Slip detected during slip.
    pub tp_rate: f64,
    /// Non-slip detected during non-slip.
    pub tn_rate: f64,
    pub confusion: Confusion,
    /// (correct, total) per ledger cell.
    pub factor_breakdown: BTreeMap<CellKey, (usize, usize)>,
}

impl EvalReport {
    pub fn from_confusion(confusion: Confusion, factor_breakdown: BTreeMap<CellKey, (usize, usize)>) -> Self {
        Self {
            accuracy: ratio(confusion.tp + confusion.tn, confusion.total()),
            tp_rate: ratio(confusion.tp, confusion.tp + confusion.fn_),
            tn_rate: ratio(confusion.tn, confusion.tn + confusion.fp),
            confusion,
            factor_breakdown,
        }
    }

    /// Scores explicit (truth, predicted) pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a LabeledWindow, Label)>) -> Self {
        let mut confusion = Confusion::default();
        let mut breakdown: BTreeMap<CellKey, (usize, usize)> = BTreeMap::new();
        for (w, p) in pairs {
            confusion.record(w.label, p);
            let e = breakdown.entry(w.provenance.cell()).or_default();
            e.0 += usize::from(w.label == p);
            e.1 += 1;
        }
        Self::from_confusion(confusion, breakdown)
    }
}

/// Per-window verdicts, in dataset order.
pub fn predictions<C: Classifier + ?Sized>(model: &C, windows: &[LabeledWindow]) -> Vec<Label> {
    windows.par_iter().map(|w| model.classify(&w.samples)).collect()
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, test: &WindowedDataset) -> Result<EvalReport, EvalError> {
    if let Some(w) = model.window_size() {
        if w != test.window_size {
            return Err(EvalError::WindowSizeMismatch {
                model: w,
                test: test.window_size,
            });
        }
    }
    let preds = predictions(model, &test.windows);
    Ok(EvalReport::from_pairs(test.windows.iter().zip(preds)))
}

/// Phase of the kept samples when downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    /// Keep samples `0, f, 2f, ...`.
    #[default]
    Zero,
    /// Per-window random offset, seeded.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DownsampleOptions {
    /// Keep `floor(W / f)` samples instead of rejecting indivisible windows.
    pub truncate: bool,
    pub phase: Phase,
}

/// Keeps every `factor`-th sample of each window.
pub fn downsample_windows(
    dataset: &WindowedDataset,
    factor: usize,
    options: DownsampleOptions,
) -> Result<WindowedDataset, EvalError> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(EvalError::InvalidFactor(factor));
    }
    let w = dataset.window_size;
    if w % factor != 0 && !options.truncate {
        return Err(EvalError::IndivisibleWindow { window: w, factor });
    }
    let kept = w / factor;
    if kept == 0 {
        return Err(EvalError::IndivisibleWindow { window: w, factor });
    }
    let max_offset = (factor - 1).min(w - 1 - (kept - 1) * factor);
    let mut rng = match options.phase {
        Phase::Random(s) => Some(rng_for(s, "downsample-phase", &[factor as u64])),
        Phase::Zero => None,
    };
    let windows = dataset
        .windows
        .iter()
        .map(|win| {
            let offset = rng.as_mut().map_or(0, |r| r.random_range(0..=max_offset));
            LabeledWindow {
                samples: (0..kept).map(|j| win.samples[offset + j * factor]).collect(),
                label: win.label,
                provenance: win.provenance.clone(),
            }
        })
        .collect();
    Ok(WindowedDataset::from_windows(
        windows,
        kept,
        dataset.sampling_rate_hz / factor as f64,
        dataset.plan.clone(),
        dataset.seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepAxis {
    WindowSize,
    SamplingRate,
    Material,
    Speed,
    Transfer,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::WindowSize => "window",
            SweepAxis::SamplingRate => "rate",
            SweepAxis::Material => "material",
            SweepAxis::Speed => "speed",
            SweepAxis::Transfer => "transfer",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "window" => Ok(SweepAxis::WindowSize),
            "rate" => Ok(SweepAxis::SamplingRate),
            "material" => Ok(SweepAxis::Material),
            "speed" => Ok(SweepAxis::Speed),
            "transfer" => Ok(SweepAxis::Transfer),
            other => Err(format!("unknown sweep axis '{other}' (window|rate|material|speed|transfer)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub setting: String,
    /// Trained-with/without flag, or the test target for transfer rows.
    pub variant: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub config_fingerprint: u64,
    /// Free-form header line (e.g. how test pools were formed).
    pub note: String,
}

impl SweepReport {
    pub fn row(&self, setting: &str, variant: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.setting == setting && r.variant == variant)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# slipcal sweep axis={}", self.axis.name());
        let _ = writeln!(s, "# seed={} config={:016x}", self.seed, self.config_fingerprint);
        if !self.note.is_empty() {
            let _ = writeln!(s, "# {}", self.note);
        }
        s.push_str("axis,setting,variant,accuracy,tp_rate,tn_rate,tp,fn,tn,fp,total\n");
        for r in &self.rows {
            let c = r.report.confusion;
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{}",
                self.axis.name(),
                r.setting,
                r.variant,
                r.report.accuracy,
                r.report.tp_rate,
                r.report.tn_rate,
                c.tp,
                c.fn_,
                c.tn,
                c.fp,
                c.total()
            );
        }
        s
    }

    /// Aligned text table. Transfer sweeps print as a train x test matrix.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        if self.axis == SweepAxis::Transfer {
            let mut targets: Vec<&str> = Vec::new();
            let mut sources: Vec<&str> = Vec::new();
            for r in &self.rows {
                if !targets.contains(&r.variant.as_str()) {
                    targets.push(&r.variant);
                }
                if !sources.contains(&r.setting.as_str()) {
                    sources.push(&r.setting);
                }
            }
            let _ = write!(s, "{:<12}", "train\\test");
            for t in &targets {
                let _ = write!(s, "{t:>12}");
            }
            s.push('\n');
            for src in &sources {
                let _ = write!(s, "{src:<12}");
                for t in &targets {
                    match self.row(src, t) {
                        Some(r) => {
                            let _ = write!(s, "{:>12.1}", 100.0 * r.report.accuracy);
                        }
                        None => {
                            let _ = write!(s, "{:>12}", "-");
                        }
                    }
                }
                s.push('\n');
            }
            return s;
        }
        let _ = writeln!(
            s,
            "{:<12} {:<10} {:>10} {:>8} {:>8}",
            self.axis.name(),
            "variant",
            "accuracy%",
            "TP%",
            "TN%"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:<10} {:>10.1} {:>8.1} {:>8.1}",
                r.setting,
                r.variant,
                100.0 * r.report.accuracy,
                100.0 * r.report.tp_rate,
                100.0 * r.report.tn_rate
            );
        }
        s
    }
}

/// Shared sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Window size for exclusion, transfer and end-to-end runs.
    pub window_size: usize,
    pub train: TrainConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            window_size: 50,
            train: TrainConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn fingerprint(&self) -> u64 {
        derive_seed(self.train.fingerprint(), "eval-config", &[self.window_size as u64])
    }
}

/// Plan covering the factor levels actually present in `recordings`.
pub fn plan_covering(recordings: &[Recording]) -> BalancePlan {
    let mut materials: Vec<Material> = Vec::new();
    let mut slip_speeds: Vec<u32> = Vec::new();
    let mut free_speeds: Vec<u32> = Vec::new();
    for r in recordings {
        let p = r.provenance();
        match p.scenario {
            Scenario::Slip => {
                materials.push(p.material);
                slip_speeds.push(p.speed_mm_s);
            }
            Scenario::FreeSpace => free_speeds.push(p.speed_mm_s),
            Scenario::Push => {}
        }
    }
    for v in [&mut slip_speeds, &mut free_speeds] {
        v.sort_unstable();
        v.dedup();
    }
    materials.sort_unstable();
    materials.dedup();
    // keep canonical order
    let order = |s: &[u32], canon: &[u32]| -> Vec<u32> { canon.iter().copied().filter(|c| s.contains(c)).collect() };
    BalancePlan {
        materials,
        slip_speeds: order(&slip_speeds, &SLIP_SPEEDS),
        free_speeds: order(&free_speeds, &FREE_SPACE_SPEEDS),
    }
}

fn row_train_config(config: &TrainConfig, seed: u64, stage: &str, coords: &[u64]) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(seed, stage, coords),
        ..config.clone()
    }
}

/// Balanced dataset at `window`, split into (train, test).
pub fn balanced_split(
    recordings: &[Recording],
    window: usize,
    seed: u64,
    tag: &[u64],
) -> Result<(WindowedDataset, WindowedDataset), EvalError> {
    let plan = plan_covering(recordings);
    let ds = build_balanced_with(recordings, window, derive_seed(seed, "sweep-balance", tag), &plan)?;
    Ok(split_train_test(&ds, derive_seed(seed, "sweep-split", tag)))
}

/// Train on a balanced W-window split and score the held-out half.
pub fn train_and_evaluate(
    train_set: &WindowedDataset,
    test_set: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(LstmModel<f64>, EvalReport), EvalError> {
    let (model, _) = train::<f64>(train_set, config)?;
    let report = evaluate(&model, test_set)?;
    Ok((model, report))
}

pub fn sweep_window_sizes(
    recordings: &[Recording],
    sizes: &[usize],
    config: &EvalConfig,
    seed: u64,
) -> Result<SweepReport, EvalError> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let rows = sizes
        .par_iter()
        .map(|&w| {
            let (tr, te) = balanced_split(recordings, w, seed, &[w as u64])?;
            let cfg = row_train_config(&config.train, seed, "sweep-window-train", &[w as u64]);
            let (_, report) = train_and_evaluate(&tr, &te, &cfg)?;
            Ok(SweepRow {
                setting: w.to_string(),
                variant: "lstm".into(),
                report,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepReport {
        axis: SweepAxis::WindowSize,
        rows,
        seed,
        config_fingerprint: config.fingerprint(),
        note: String::new(),
    })
}

/// Formats a rate without trailing zeros (`500`, `62.5`, `31.25`).
pub fn format_rate(hz: f64) -> String {
    let s = format!("{hz:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn sweep_sampling_rates(
    recordings: &[Recording],
    factors: &[usize],
    base_window: usize,
    config: &EvalConfig,
    seed: u64,
) -> Result<SweepReport, EvalError> {
    let (tr, te) = balanced_split(recordings, base_window, seed, &[base_window as u64, 1])?;
    let mut factors = factors.to_vec();
    factors.sort_unstable();
    factors.dedup();
    let opts = DownsampleOptions {
        truncate: true,
        phase: Phase::Zero,
    };
    let rows = factors
        .par_iter()
        .map(|&f| {
            let trd = downsample_windows(&tr, f, opts)?;
            let ted = downsample_windows(&te, f, opts)?;
            let cfg = row_train_config(&config.train, seed, "sweep-rate-train", &[f as u64]);
            let (_, report) = train_and_evaluate(&trd, &ted, &cfg)?;
            Ok(SweepRow {
                setting: format_rate(tr.sampling_rate_hz / f as f64),
                variant: format!("x{f}"),
                report,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepReport {
        axis: SweepAxis::SamplingRate,
        rows,
        seed,
        config_fingerprint: config.fingerprint(),
        note: format!("base window {base_window}, truncating downsample, phase 0"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionAxis {
    Material,
    Speed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Material(Material),
    Speed(u32),
}

impl Level {
    fn matches_slip(self, w: &LabeledWindow) -> bool {
        w.label == Label::Slip
            && match self {
                Level::Material(m) => w.provenance.material == m,
                Level::Speed(s) => w.provenance.speed_mm_s == s,
            }
    }

    fn matches_push(self, w: &LabeledWindow) -> bool {
        w.provenance.scenario == Scenario::Push
            && match self {
                Level::Material(m) => w.provenance.material == m,
                Level::Speed(_) => true,
            }
    }

    fn name(self) -> String {
        match self {
            Level::Material(m) => m.to_string(),
            Level::Speed(s) => s.to_string(),
        }
    }
}

/// Test pool for one level: the level's slip windows, matched by as many
/// non-slip windows, half push (same material for the material axis) and
/// half free-space, taken in test-set order.
fn level_pool(test: &WindowedDataset, level: Level) -> WindowedDataset {
    let slip: Vec<LabeledWindow> = test.windows.iter().filter(|w| level.matches_slip(w)).cloned().collect();
    let n = slip.len();
    let push: Vec<LabeledWindow> = test
        .windows
        .iter()
        .filter(|w| level.matches_push(w))
        .take(n / 2)
        .cloned()
        .collect();
    let free: Vec<LabeledWindow> = test
        .windows
        .iter()
        .filter(|w| w.provenance.scenario == Scenario::FreeSpace)
        .take(n - push.len())
        .cloned()
        .collect();
    let mut windows = slip;
    windows.extend(push);
    windows.extend(free);
    WindowedDataset::from_windows(windows, test.window_size, test.sampling_rate_hz, test.plan.clone(), test.seed)
}

/// Per level: the all-data model and a model trained without the level, both
/// scored on the level's test pool.
pub fn exclusion_sweep(
    recordings: &[Recording],
    axis: ExclusionAxis,
    config: &EvalConfig,
    seed: u64,
) -> Result<SweepReport, EvalError> {
    let plan = plan_covering(recordings);
    let levels: Vec<Level> = match axis {
        ExclusionAxis::Material => plan.materials.iter().map(|&m| Level::Material(m)).collect(),
        ExclusionAxis::Speed => plan.slip_speeds.iter().map(|&s| Level::Speed(s)).collect(),
    };
    if levels.len() < 2 {
        return Err(EvalError::Precondition(format!(
            "exclusion needs >= 2 levels on the {axis:?} axis, found {}",
            levels.len()
        )));
    }
    let w = config.window_size;
    let axis_tag = axis as u64;
    let (tr, te) = balanced_split(recordings, w, seed, &[w as u64, 2, axis_tag])?;
    let all_cfg = row_train_config(&config.train, seed, "sweep-exclusion-all", &[axis_tag]);
    let (all_model, _) = train::<f64>(&tr, &all_cfg)?;

    let per_level = levels
        .par_iter()
        .enumerate()
        .map(|(li, &level)| {
            let pool = level_pool(&te, level);
            let included = evaluate(&all_model, &pool)?;
            let narrower = match level {
                Level::Material(m) => tr.plan.clone().without_material(m),
                Level::Speed(s) => tr.plan.clone().without_slip_speed(s),
            };
            let ex_train = rebalance_dataset(&tr, &narrower, derive_seed(seed, "sweep-exclusion-rebalance", &[axis_tag, li as u64]))?;
            let cfg = row_train_config(&config.train, seed, "sweep-exclusion-train", &[axis_tag, li as u64]);
            let (ex_model, _) = train::<f64>(&ex_train, &cfg)?;
            let excluded = evaluate(&ex_model, &pool)?;
            Ok(vec![
                SweepRow {
                    setting: level.name(),
                    variant: "included".into(),
                    report: included,
                },
                SweepRow {
                    setting: level.name(),
                    variant: "excluded".into(),
                    report: excluded,
                },
            ])
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(SweepReport {
        axis: match axis {
            ExclusionAxis::Material => SweepAxis::Material,
            ExclusionAxis::Speed => SweepAxis::Speed,
        },
        rows: per_level.into_iter().flatten().collect(),
        seed,
        config_fingerprint: config.fingerprint(),
        note: "level pools: level slip windows + equal non-slip (half push of the level's material or all materials, half free-space)".into(),
    })
}

/// Concatenates datasets and shuffles the windows.
fn combine(parts: &[&WindowedDataset], seed: u64) -> WindowedDataset {
    let mut windows: Vec<LabeledWindow> = parts.iter().flat_map(|d| d.windows.iter().cloned()).collect();
    windows.shuffle(&mut rng_for(seed, "combine", &[]));
    let first = parts[0];
    WindowedDataset::from_windows(windows, first.window_size, first.sampling_rate_hz, first.plan.clone(), seed)
}

pub const COMBINED: &str = "combined";

/// Train per sensor id (and on all ids combined), evaluate every model on
/// every id's test half (and the combined test set).
pub fn transfer_matrix(recordings: &[Recording], config: &EvalConfig, seed: u64) -> Result<SweepReport, EvalError> {
    let mut by_id: BTreeMap<String, Vec<Recording>> = BTreeMap::new();
    for r in recordings {
        by_id.entry(r.provenance().sensor_id.clone()).or_default().push(r.clone());
    }
    if by_id.is_empty() {
        return Err(EvalError::Precondition("no recordings".into()));
    }
    let w = config.window_size;
    let groups: Vec<(&String, &Vec<Recording>)> = by_id.iter().collect();
    let splits = groups
        .par_iter()
        .enumerate()
        .map(|(i, (id, recs))| {
            let (tr, te) = balanced_split(recs, w, seed, &[w as u64, 3, i as u64])?;
            Ok(((*id).clone(), tr, te))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let mut sources: Vec<(String, WindowedDataset, WindowedDataset)> = splits;
    if sources.len() > 1 {
        let trains: Vec<&WindowedDataset> = sources.iter().map(|s| &s.1).collect();
        let tests: Vec<&WindowedDataset> = sources.iter().map(|s| &s.2).collect();
        let ctr = combine(&trains, derive_seed(seed, "transfer-combined-train", &[]));
        let cte = combine(&tests, derive_seed(seed, "transfer-combined-test", &[]));
        sources.push((COMBINED.to_string(), ctr, cte));
    }
    let models = sources
        .par_iter()
        .enumerate()
        .map(|(i, (_, tr, _))| {
            let cfg = row_train_config(&config.train, seed, "transfer-train", &[i as u64]);
            Ok(train::<f64>(tr, &cfg)?.0)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut rows = Vec::new();
    for ((src, _, _), model) in sources.iter().zip(&models) {
        for (dst, _, te) in &sources {
            rows.push(SweepRow {
                setting: src.clone(),
                variant: dst.clone(),
                report: evaluate(model, te)?,
            });
        }
    }
    Ok(SweepReport {
        axis: SweepAxis::Transfer,
        rows,
        seed,
        config_fingerprint: config.fingerprint(),
        note: "setting = training source, variant = test target".into(),
    })
}

/// Collapsed runs of each class, as spectral pools.
pub fn class_pools(recordings: &[Recording]) -> (Vec<UniSignal>, Vec<UniSignal>) {
    let mut ns = Vec::new();
    let mut sl = Vec::new();
    for run in crate::balance::collapse_runs(recordings) {
        let fs = recordings[0].sampling_rate_hz();
        let sig = UniSignal::new(run.samples, fs);
        match run.provenance.scenario.label() {
            Label::NonSlip => ns.push(sig),
            Label::Slip => sl.push(sig),
        }
    }
    (ns, sl)
}

/// Outcome of a paired LSTM vs. threshold-baseline run on one split.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub spectral: SpectralReport,
    pub threshold: ThresholdModel,
    pub lstm: EvalReport,
    pub baseline: EvalReport,
    pub model: LstmModel<f64>,
}

/// End-to-end run at `config.window_size`: spectral significance over the
/// class pools picks the band, the threshold baseline is calibrated on the
/// training half, an LSTM is trained on the same half, and both are scored on
/// the test half.
pub fn compare_with_baseline(
    recordings: &[Recording],
    config: &EvalConfig,
    spectral: &SignificanceConfig,
    seed: u64,
) -> Result<Comparison, EvalError> {
    let w = config.window_size;
    let (tr, te) = balanced_split(recordings, w, seed, &[w as u64, 4])?;
    let (ns, sl) = class_pools(recordings);
    let fs = tr.sampling_rate_hz;
    let report = significance_analysis(&ns, &sl, fs, derive_seed(seed, "compare-spectral", &[]), spectral)?;
    let band = most_significant_band(&report, 0.95)?;
    // the band must contain at least one bin at this window length
    BandEnergy::new(w, band, fs)?;
    let threshold = fit_threshold_model(tr.windows.iter().map(|x| (x.samples.as_slice(), x.label)), band, fs)?;
    let baseline = evaluate(&threshold, &te)?;
    let cfg = row_train_config(&config.train, seed, "compare-train", &[w as u64]);
    let (model, lstm) = train_and_evaluate(&tr, &te, &cfg)?;
    Ok(Comparison {
        spectral: report,
        threshold,
        lstm,
        baseline,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{Finger, Provenance};

    struct Echo;
    impl Classifier for Echo {
        fn classify(&self, w: &[f64]) -> Label {
            if w[0] > 0.0 {
                Label::Slip
            } else {
                Label::NonSlip
            }
        }
        fn window_size(&self) -> Option<usize> {
            None
        }
    }

    struct Constant(Label);
    impl Classifier for Constant {
        fn classify(&self, _: &[f64]) -> Label {
            self.0
        }
        fn window_size(&self) -> Option<usize> {
            Some(4)
        }
    }

    fn dataset(n_each: usize) -> WindowedDataset {
        let mk = |label: Label, scenario: Scenario, material: Material, speed: u32, v: f64| LabeledWindow {
            samples: vec![v, 0.0, 0.0, 0.0],
            label,
            provenance: Provenance {
                scenario,
                material,
                speed_mm_s: speed,
                sensor_id: "s".into(),
                finger: Finger::Index,
            },
        };
        let mut w = Vec::new();
        for i in 0..n_each {
            w.push(mk(Label::Slip, Scenario::Slip, Material::Pvc, 25, 1.0 + i as f64));
            w.push(mk(Label::NonSlip, Scenario::Push, Material::Pvc, 0, -1.0 - i as f64));
        }
        WindowedDataset::from_windows(w, 4, 1000.0, BalancePlan::default(), 0)
    }

    #[test]
    fn echo_and_constant_scores() {
        let d = dataset(10);
        let r = evaluate(&Echo, &d).unwrap();
        assert_eq!((r.accuracy, r.tp_rate, r.tn_rate), (1.0, 1.0, 1.0));
        let r = evaluate(&Constant(Label::NonSlip), &d).unwrap();
        assert_eq!((r.accuracy, r.tp_rate, r.tn_rate), (0.5, 0.0, 1.0));
        let r = evaluate(&Constant(Label::Slip), &d).unwrap();
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn hand_built_confusion() {
        let c = Confusion {
            tp: 873,
            fn_: 127,
            tn: 923,
            fp: 77,
        };
        let r = EvalReport::from_confusion(c, BTreeMap::new());
        assert!((r.accuracy - 0.898).abs() < 1e-12);
        assert!((r.tp_rate - 0.873).abs() < 1e-12);
        assert!((r.tn_rate - 0.923).abs() < 1e-12);
    }

    #[test]
    fn window_mismatch() {
        let mut d = dataset(3);
        d.window_size = 5;
        assert!(matches!(
            evaluate(&Constant(Label::Slip), &d),
            Err(EvalError::WindowSizeMismatch { model: 4, test: 5 })
        ));
    }

    fn sine_dataset(w: usize) -> WindowedDataset {
        let fs = 1000.0;
        let windows = (0..3)
            .map(|k| LabeledWindow {
                samples: (0..w)
                    .map(|t| (2.0 * std::f64::consts::PI * 30.0 * (k * w + t) as f64 / fs).sin())
                    .collect(),
                label: Label::Slip,
                provenance: Provenance {
                    scenario: Scenario::Slip,
                    material: Material::Pvc,
                    speed_mm_s: 5,
                    sensor_id: "s".into(),
                    finger: Finger::Index,
                },
            })
            .collect();
        WindowedDataset::from_windows(windows, w, fs, BalancePlan::default(), 0)
    }

    #[test]
    fn downsampled_sine_is_resampled_sine() {
        let d = sine_dataset(200);
        let x = downsample_windows(&d, 8, DownsampleOptions::default()).unwrap();
        assert_eq!(x.window_size, 25);
        assert_eq!(x.sampling_rate_hz, 125.0);
        for (k, w) in x.windows.iter().enumerate() {
            for (j, v) in w.samples.iter().enumerate() {
                let t = (k * 200) as f64 / 1000.0 + j as f64 / 125.0;
                let want = (2.0 * std::f64::consts::PI * 30.0 * t).sin();
                // same index arithmetic path as the source samples
                assert_eq!(*v, d.windows[k].samples[j * 8]);
                assert!((v - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn downsample_edge_cases() {
        let d = sine_dataset(200);
        assert!(matches!(
            downsample_windows(&d, 32, DownsampleOptions::default()),
            Err(EvalError::IndivisibleWindow { window: 200, factor: 32 })
        ));
        let t = downsample_windows(
            &d,
            32,
            DownsampleOptions {
                truncate: true,
                phase: Phase::Zero,
            },
        )
        .unwrap();
        assert_eq!(t.window_size, 6);
        assert_eq!(t.sampling_rate_hz, 31.25);
        let id = downsample_windows(&d, 1, DownsampleOptions::default()).unwrap();
        assert_eq!(id.windows, d.windows);
        assert!(matches!(downsample_windows(&d, 3, DownsampleOptions::default()), Err(EvalError::InvalidFactor(3))));
        let r = downsample_windows(
            &d,
            4,
            DownsampleOptions {
                truncate: false,
                phase: Phase::Random(3),
            },
        )
        .unwrap();
        assert_eq!(r.window_size, 50);
    }

    #[test]
    fn downsample_composes() {
        let d = sine_dataset(200);
        let o = DownsampleOptions::default();
        let ab = downsample_windows(&downsample_windows(&d, 2, o).unwrap(), 4, o).unwrap();
        let direct = downsample_windows(&d, 8, o).unwrap();
        assert_eq!(ab.windows, direct.windows);
        assert_eq!(ab.sampling_rate_hz, direct.sampling_rate_hz);
    }

    #[test]
    fn rates_format_like_table_headers() {
        let got: Vec<String> = [2usize, 4, 8, 16, 32].iter().map(|f| format_rate(1000.0 / *f as f64)).collect();
        assert_eq!(got, ["500", "250", "125", "62.5", "31.25"]);
    }
}
