//! Recording metadata, windowing and proportion-exact dataset balancing.
//!
//! Class and factor proportions enforced by [`rebalance`]:
//!
//! * Slip and non-slip hold the same number of windows.
//! * Every slip cell (material x speed) holds exactly `k` windows.
//! * Non-slip is half push, half free-space. Push is split evenly over
//!   materials; free-space is split evenly over arm speeds, the remainder
//!   going to the lowest speeds first.
//!
//! `k` is the largest value every cell can supply (with `k * |speeds|` even so
//! the push half divides over materials). Cells are trimmed from their end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed::rng_for;
use crate::signal::{collapse_signal, SampleVector, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("no recordings for required cell {0}")]
    MissingCell(CellKey),
    #[error("cell {0} cannot supply a single balanced window")]
    InsufficientData(CellKey),
    #[error("recordings mix sampling rates {0} Hz and {1} Hz")]
    RateMismatch(f64, f64),
    #[error("window size {requested} exceeds shortest contiguous run ({shortest})")]
    WindowTooLarge { requested: usize, shortest: usize },
    #[error("window size must be positive")]
    ZeroWindow,
    #[error("dataset carries no source runs to re-cut")]
    NoSourceRuns,
    #[error("balance plan needs at least one material, slip speed and free-space speed")]
    EmptyPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    FreeSpace,
    Push,
    Slip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Material {
    Aluminum,
    Pvc,
    Neoprene,
    Cardboard,
    Plywood,
    None,
}

impl Material {
    pub const ALL: [Material; 5] = [
        Material::Aluminum,
        Material::Pvc,
        Material::Neoprene,
        Material::Cardboard,
        Material::Plywood,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Finger {
    Index,
    Middle,
    Little,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    NonSlip,
    Slip,
}

impl Scenario {
    pub fn label(self) -> Label {
        match self {
            Scenario::Slip => Label::Slip,
            _ => Label::NonSlip,
        }
    }
}

/// Slip speeds in mm/s.
pub const SLIP_SPEEDS: [u32; 4] = [5, 25, 50, 75];
/// Free-space arm speeds in mm/s.
pub const FREE_SPACE_SPEEDS: [u32; 3] = [25, 50, 75];

macro_rules! text_enum {
    ($ty:ty, $( $var:path => $s:literal ),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $( $var => $s ),+ };
                f.write_str(s)
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $( $s => Ok($var), )+
                    other => Err(format!("unknown {} '{}'", stringify!($ty), other)),
                }
            }
        }
    };
}

text_enum!(Scenario, Scenario::FreeSpace => "free_space", Scenario::Push => "push", Scenario::Slip => "slip");
text_enum!(Material,
    Material::Aluminum => "aluminum", Material::Pvc => "pvc", Material::Neoprene => "neoprene",
    Material::Cardboard => "cardboard", Material::Plywood => "plywood", Material::None => "none");
text_enum!(Finger, Finger::Index => "index", Finger::Middle => "middle", Finger::Little => "little");
text_enum!(Label, Label::NonSlip => "nonslip", Label::Slip => "slip");

/// Where a window came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub scenario: Scenario,
    pub material: Material,
    pub speed_mm_s: u32,
    pub sensor_id: String,
    pub finger: Finger,
}

impl Provenance {
    pub fn cell(&self) -> CellKey {
        CellKey {
            label: self.scenario.label(),
            scenario: self.scenario,
            material: self.material,
            speed_mm_s: self.speed_mm_s,
        }
    }
}

/// Ledger cell: one (label, scenario, material, speed) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub label: Label,
    pub scenario: Scenario,
    pub material: Material,
    pub speed_mm_s: u32,
}

impl CellKey {
    pub fn new(scenario: Scenario, material: Material, speed_mm_s: u32) -> Self {
        Self {
            label: scenario.label(),
            scenario,
            material,
            speed_mm_s,
        }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}mm_s", self.scenario, self.material, self.speed_mm_s)
    }
}

pub type Ledger = BTreeMap<CellKey, usize>;

/// One contiguous multi-channel capture with its scenario metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    frames: Vec<SampleVector>,
    sampling_rate_hz: f64,
    provenance: Provenance,
}

/// Checks the scenario/material/speed combination rules.
pub fn validate_combination(
    scenario: Scenario,
    material: Material,
    speed_mm_s: u32,
) -> Result<(), String> {
    match scenario {
        Scenario::FreeSpace if material != Material::None => {
            Err(format!("free-space recording with material {material}"))
        }
        Scenario::FreeSpace if !FREE_SPACE_SPEEDS.contains(&speed_mm_s) => {
            Err(format!("free-space speed {speed_mm_s} not in {FREE_SPACE_SPEEDS:?}"))
        }
        Scenario::Slip if material == Material::None => Err("slip recording without material".into()),
        Scenario::Slip if !SLIP_SPEEDS.contains(&speed_mm_s) => {
            Err(format!("slip speed {speed_mm_s} not in {SLIP_SPEEDS:?}"))
        }
        Scenario::Push if material == Material::None => Err("push recording without material".into()),
        Scenario::Push if speed_mm_s != 0 => Err(format!("push recording with speed {speed_mm_s}")),
        _ => Ok(()),
    }
}

impl Recording {
    pub fn new(
        frames: Vec<SampleVector>,
        sampling_rate_hz: f64,
        scenario: Scenario,
        material: Material,
        speed_mm_s: u32,
        sensor_id: impl Into<String>,
        finger: Finger,
    ) -> Result<Self, BalanceError> {
        crate::signal::check_frames(&frames)?;
        if !(sampling_rate_hz > 0.0 && sampling_rate_hz.is_finite()) {
            return Err(BalanceError::InvalidRecording(format!(
                "sampling rate {sampling_rate_hz}"
            )));
        }
        validate_combination(scenario, material, speed_mm_s).map_err(BalanceError::InvalidRecording)?;
        let sensor_id = sensor_id.into();
        if sensor_id.is_empty() || sensor_id.contains(|c: char| c == ',' || c.is_whitespace()) {
            return Err(BalanceError::InvalidRecording(format!(
                "sensor id '{sensor_id}' must be non-empty without commas or whitespace"
            )));
        }
        Ok(Self {
            frames,
            sampling_rate_hz,
            provenance: Provenance {
                scenario,
                material,
                speed_mm_s,
                sensor_id,
                finger,
            },
        })
    }

    pub fn frames(&self) -> &[SampleVector] {
        &self.frames
    }

    pub fn channels(&self) -> usize {
        self.frames[0].dim()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Collapsed gradient signal of this recording.
    pub fn collapse(&self) -> Vec<f64> {
        collapse_signal(&self.frames, self.sampling_rate_hz)
            .expect("validated at construction")
            .samples
    }
}

/// Collapsed signal of one recording, kept so datasets can be re-cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRun {
    pub provenance: Provenance,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub samples: Vec<f64>,
    pub label: Label,
    pub provenance: Provenance,
}

/// Which factor levels a balanced dataset must cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancePlan {
    pub materials: Vec<Material>,
    pub slip_speeds: Vec<u32>,
    pub free_speeds: Vec<u32>,
}

impl Default for BalancePlan {
    fn default() -> Self {
        Self {
            materials: Material::ALL.to_vec(),
            slip_speeds: SLIP_SPEEDS.to_vec(),
            free_speeds: FREE_SPACE_SPEEDS.to_vec(),
        }
    }
}

impl BalancePlan {
    pub fn without_material(mut self, m: Material) -> Self {
        self.materials.retain(|&x| x != m);
        self
    }

    pub fn without_slip_speed(mut self, s: u32) -> Self {
        self.slip_speeds.retain(|&x| x != s);
        self
    }

    /// Cells in ledger order: slip cells, push cells, free-space cells.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for &m in &self.materials {
            for &s in &self.slip_speeds {
                cells.push(CellKey::new(Scenario::Slip, m, s));
            }
        }
        for &m in &self.materials {
            cells.push(CellKey::new(Scenario::Push, m, 0));
        }
        for &s in &self.free_speeds {
            cells.push(CellKey::new(Scenario::FreeSpace, Material::None, s));
        }
        cells
    }

    /// Per-cell targets for slip-cell size `k`, or `None` if `k` does not
    /// divide evenly.
    pub fn targets(&self, k: usize) -> Option<BTreeMap<CellKey, usize>> {
        let n_s = self.slip_speeds.len();
        let n_m = self.materials.len();
        let n_f = self.free_speeds.len();
        if (k * n_s) % 2 != 0 {
            return None;
        }
        let push_per_material = k * n_s / 2;
        let free_total = push_per_material * n_m;
        let mut out = BTreeMap::new();
        for &m in &self.materials {
            for &s in &self.slip_speeds {
                out.insert(CellKey::new(Scenario::Slip, m, s), k);
            }
            out.insert(CellKey::new(Scenario::Push, m, 0), push_per_material);
        }
        for (i, &s) in self.free_speeds.iter().enumerate() {
            let share = free_total / n_f + usize::from(i < free_total % n_f);
            out.insert(CellKey::new(Scenario::FreeSpace, Material::None, s), share);
        }
        Some(out)
    }
}

/// Labeled fixed-length windows with enforced proportions.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub windows: Vec<LabeledWindow>,
    pub window_size: usize,
    pub sampling_rate_hz: f64,
    pub ledger: Ledger,
    pub plan: BalancePlan,
    pub seed: u64,
    /// Source runs for [`rewindow`]; empty for derived datasets.
    pub runs: Arc<Vec<SignalRun>>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.windows.iter().filter(|w| w.label == label).count()
    }

    /// Builds a derived dataset (no source runs) from explicit windows.
    pub fn from_windows(
        windows: Vec<LabeledWindow>,
        window_size: usize,
        sampling_rate_hz: f64,
        plan: BalancePlan,
        seed: u64,
    ) -> Self {
        let ledger = ledger_of(&windows);
        Self {
            windows,
            window_size,
            sampling_rate_hz,
            ledger,
            plan,
            seed,
            runs: Arc::new(Vec::new()),
        }
    }

    /// All samples of all windows, in window order.
    pub fn flat_samples(&self) -> Vec<f64> {
        self.windows.iter().flat_map(|w| w.samples.iter().copied()).collect()
    }
}

pub fn ledger_of(windows: &[LabeledWindow]) -> Ledger {
    let mut ledger = Ledger::new();
    for w in windows {
        *ledger.entry(w.provenance.cell()).or_default() += 1;
    }
    ledger
}

fn common_rate(recordings: &[Recording]) -> Result<f64, BalanceError> {
    let fs = recordings
        .first()
        .map(Recording::sampling_rate_hz)
        .ok_or(BalanceError::MissingCell(CellKey::new(Scenario::Slip, Material::Aluminum, 5)))?;
    for r in recordings {
        if r.sampling_rate_hz() != fs {
            return Err(BalanceError::RateMismatch(fs, r.sampling_rate_hz()));
        }
    }
    Ok(fs)
}

/// Collapses every recording, ordered by (cell, sensor, finger) for
/// input-order independence.
pub fn collapse_runs(recordings: &[Recording]) -> Vec<SignalRun> {
    let mut order: Vec<&Recording> = recordings.iter().collect();
    order.sort_by(|a, b| a.provenance.cmp(&b.provenance));
    order
        .into_iter()
        .map(|r| SignalRun {
            provenance: r.provenance.clone(),
            samples: r.collapse(),
        })
        .collect()
}

/// Cuts runs into non-overlapping windows, grouped per cell. Within a cell the
/// windows of its runs are interleaved round-robin, so trimming the cell's
/// tail removes the latest windows of every run evenly.
fn cut_runs(runs: &[SignalRun], w: usize) -> BTreeMap<CellKey, Vec<LabeledWindow>> {
    let mut per_cell: BTreeMap<CellKey, Vec<Vec<LabeledWindow>>> = BTreeMap::new();
    for run in runs {
        let label = run.provenance.scenario.label();
        let windows: Vec<LabeledWindow> = run
            .samples
            .chunks_exact(w)
            .map(|c| LabeledWindow {
                samples: c.to_vec(),
                label,
                provenance: run.provenance.clone(),
            })
            .collect();
        per_cell.entry(run.provenance.cell()).or_default().push(windows);
    }
    per_cell
        .into_iter()
        .map(|(cell, lists)| {
            let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
            let mut iters: Vec<_> = lists.into_iter().map(Vec::into_iter).collect();
            let mut merged = Vec::new();
            for _ in 0..longest {
                for it in iters.iter_mut() {
                    if let Some(win) = it.next() {
                        merged.push(win);
                    }
                }
            }
            (cell, merged)
        })
        .collect()
}

/// Trims per-cell window lists to exact plan proportions and shuffles.
///
/// Windows of cells outside the plan are dropped. Each cell keeps its first
/// windows; within-class shuffles are followed by a final shuffle over the
/// concatenated classes.
pub fn rebalance(
    per_cell: BTreeMap<CellKey, Vec<LabeledWindow>>,
    plan: &BalancePlan,
    seed: u64,
) -> Result<Vec<LabeledWindow>, BalanceError> {
    if plan.materials.is_empty() || plan.slip_speeds.is_empty() || plan.free_speeds.is_empty() {
        return Err(BalanceError::EmptyPlan);
    }
    let cells = plan.cells();
    for c in &cells {
        match per_cell.get(c) {
            None => return Err(BalanceError::MissingCell(*c)),
            Some(v) if v.is_empty() => return Err(BalanceError::InsufficientData(*c)),
            _ => {}
        }
    }
    let avail = |c: &CellKey| per_cell.get(c).map_or(0, Vec::len);
    let upper = cells
        .iter()
        .filter(|c| c.scenario == Scenario::Slip)
        .map(avail)
        .min()
        .unwrap_or(0);
    let mut chosen = None;
    for k in (1..=upper).rev() {
        if let Some(t) = plan.targets(k) {
            if t.iter().all(|(c, &n)| avail(c) >= n) {
                chosen = Some(t);
                break;
            }
        }
    }
    let targets = match chosen {
        Some(t) => t,
        None => {
            // report the scarcest cell relative to its k = 1 (or 2) requirement
            let t = plan.targets(1).or_else(|| plan.targets(2)).expect("k = 2 always divides");
            let worst = t
                .iter()
                .find(|(c, &n)| avail(c) < n)
                .map(|(c, _)| *c)
                .unwrap_or(cells[0]);
            return Err(BalanceError::InsufficientData(worst));
        }
    };

    let mut per_cell = per_cell;
    let mut nonslip = Vec::new();
    let mut slip = Vec::new();
    for (cell, n) in &targets {
        let mut list = per_cell.remove(cell).expect("checked above");
        list.truncate(*n);
        match cell.label {
            Label::Slip => slip.extend(list),
            Label::NonSlip => nonslip.extend(list),
        }
    }
    let mut rng = rng_for(seed, "balance-shuffle", &[]);
    nonslip.shuffle(&mut rng);
    slip.shuffle(&mut rng);
    let mut all = nonslip;
    all.extend(slip);
    all.shuffle(&mut rng);
    Ok(all)
}

fn assemble(
    runs: Arc<Vec<SignalRun>>,
    window_size: usize,
    fs: f64,
    plan: &BalancePlan,
    seed: u64,
) -> Result<WindowedDataset, BalanceError> {
    if window_size == 0 {
        return Err(BalanceError::ZeroWindow);
    }
    let per_cell = cut_runs(&runs, window_size);
    let windows = rebalance(per_cell, plan, seed)?;
    let ledger = ledger_of(&windows);
    Ok(WindowedDataset {
        windows,
        window_size,
        sampling_rate_hz: fs,
        ledger,
        plan: plan.clone(),
        seed,
        runs,
    })
}

/// Builds a balanced dataset over the full factor grid.
pub fn build_balanced(
    recordings: &[Recording],
    window_size: usize,
    seed: u64,
) -> Result<WindowedDataset, BalanceError> {
    build_balanced_with(recordings, window_size, seed, &BalancePlan::default())
}

pub fn build_balanced_with(
    recordings: &[Recording],
    window_size: usize,
    seed: u64,
    plan: &BalancePlan,
) -> Result<WindowedDataset, BalanceError> {
    if recordings.is_empty() {
        let first = plan.cells().first().copied();
        return Err(first.map_or(BalanceError::EmptyPlan, BalanceError::MissingCell));
    }
    let fs = common_rate(recordings)?;
    let runs = Arc::new(collapse_runs(recordings));
    assemble(runs, window_size, fs, plan, seed)
}

/// Re-cuts the dataset's source runs at a new window size and rebalances.
pub fn rewindow(dataset: &WindowedDataset, new_window_size: usize) -> Result<WindowedDataset, BalanceError> {
    if new_window_size == dataset.window_size {
        return Ok(dataset.clone());
    }
    if dataset.runs.is_empty() {
        return Err(BalanceError::NoSourceRuns);
    }
    let shortest = dataset.runs.iter().map(|r| r.samples.len()).min().unwrap_or(0);
    if new_window_size > shortest {
        return Err(BalanceError::WindowTooLarge {
            requested: new_window_size,
            shortest,
        });
    }
    assemble(
        Arc::clone(&dataset.runs),
        new_window_size,
        dataset.sampling_rate_hz,
        &dataset.plan,
        dataset.seed,
    )
}

/// Stratified 50/50 split: every ledger cell is halved, odd remainders go to
/// the training half. Both halves keep the dataset's relative window order.
pub fn split_train_test(dataset: &WindowedDataset, seed: u64) -> (WindowedDataset, WindowedDataset) {
    let mut by_cell: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
    for (i, w) in dataset.windows.iter().enumerate() {
        by_cell.entry(w.provenance.cell()).or_default().push(i);
    }
    let mut rng = rng_for(seed, "split", &[]);
    let mut in_train = vec![false; dataset.len()];
    for idx in by_cell.values_mut() {
        idx.shuffle(&mut rng);
        let n_train = idx.len().div_ceil(2);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (w, t) in dataset.windows.iter().zip(in_train) {
        if t {
            train.push(w.clone());
        } else {
            test.push(w.clone());
        }
    }
    let half = |windows: Vec<LabeledWindow>| {
        WindowedDataset::from_windows(
            windows,
            dataset.window_size,
            dataset.sampling_rate_hz,
            dataset.plan.clone(),
            dataset.seed,
        )
    };
    (half(train), half(test))
}

/// Groups windows per cell, preserving order.
pub fn group_by_cell<'a>(windows: impl IntoIterator<Item = &'a LabeledWindow>) -> BTreeMap<CellKey, Vec<LabeledWindow>> {
    let mut out: BTreeMap<CellKey, Vec<LabeledWindow>> = BTreeMap::new();
    for w in windows {
        out.entry(w.provenance.cell()).or_default().push(w.clone());
    }
    out
}

/// Rebalances an existing dataset's windows under a narrower plan.
pub fn rebalance_dataset(
    dataset: &WindowedDataset,
    plan: &BalancePlan,
    seed: u64,
) -> Result<WindowedDataset, BalanceError> {
    let windows = rebalance(group_by_cell(&dataset.windows), plan, seed)?;
    Ok(WindowedDataset::from_windows(
        windows,
        dataset.window_size,
        dataset.sampling_rate_hz,
        plan.clone(),
        seed,
    ))
}
