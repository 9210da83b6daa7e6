use rand::Rng;
use rayon::prelude::*;

use super::ks::{ks_critical_value, ks_statistic_sorted, KS_C_ALPHA_05};
use super::spectrum::SpectrumAnalyzer;
use super::SpectralError;
use crate::scalar::{percentile_sorted, Real};
use crate::seed::rng_for;
use crate::signal::UniSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceConfig {
    /// Sequences drawn per class and repetition.
    pub n_bootstrap: usize,
    pub n_repetitions: usize,
    pub c_alpha: f64,
    /// Sequence length; `None` means `round(fs)` for 1 Hz bins.
    pub sequence_length: Option<usize>,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        Self {
            n_bootstrap: 100,
            n_repetitions: 200,
            c_alpha: KS_C_ALPHA_05,
            sequence_length: None,
        }
    }
}

/// Per-bin mean amplitude with a 95 % percentile band.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassBands {
    pub mean: Vec<f64>,
    pub lo95: Vec<f64>,
    pub hi95: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub resolution_hz: f64,
    pub sequence_length: usize,
    pub nonslip: ClassBands,
    pub slip: ClassBands,
    /// Fraction of repetitions whose KS test rejected, per bin.
    pub significance: Vec<f64>,
    pub n_bootstrap: usize,
    pub n_repetitions: usize,
    pub seed: u64,
}

impl SpectralReport {
    /// Report carrying only a significance trace (zeroed class bands).
    pub fn from_significance(significance: Vec<f64>, resolution_hz: f64) -> Self {
        let n = significance.len();
        let zero = ClassBands {
            mean: vec![0.0; n],
            lo95: vec![0.0; n],
            hi95: vec![0.0; n],
        };
        Self {
            resolution_hz,
            sequence_length: 2 * n.saturating_sub(1),
            nonslip: zero.clone(),
            slip: zero,
            significance,
            n_bootstrap: 0,
            n_repetitions: 0,
            seed: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.significance.len()
    }
}

/// Uniform sampler over every valid (signal, start) pair of a pool.
struct StartSampler<'a, T> {
    pool: &'a [UniSignal<T>],
    cumulative: Vec<usize>,
    len: usize,
}

impl<'a, T: Real> StartSampler<'a, T> {
    fn new(pool: &'a [UniSignal<T>], len: usize, class: &'static str) -> Result<Self, SpectralError> {
        let mut cumulative = Vec::with_capacity(pool.len());
        let mut total = 0usize;
        for s in pool {
            total += (s.len() + 1).saturating_sub(len);
            cumulative.push(total);
        }
        if total == 0 {
            return Err(SpectralError::PoolTooShort { class, needed: len });
        }
        Ok(Self { pool, cumulative, len })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> &'a [T] {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random_range(0..total);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        let before = if idx == 0 { 0 } else { self.cumulative[idx - 1] };
        let start = u - before;
        &self.pool[idx].samples[start..start + self.len]
    }
}

struct Repetition<T> {
    verdicts: Vec<bool>,
    nonslip: Vec<Vec<T>>,
    slip: Vec<Vec<T>>,
}

/// Bootstrap KS significance between the two pools.
///
/// Each repetition draws `n_bootstrap` contiguous sequences per class (with
/// replacement, uniform start offsets), takes their amplitude spectra and runs
/// one KS test per bin. Significance is the rejection rate over repetitions.
/// Means and bands are taken over all `n_bootstrap * n_repetitions` spectra of
/// a class. Repetition `r` draws from a generator derived from `(seed, r)`, so
/// the report does not depend on scheduling.
pub fn significance_analysis<T: Real>(
    nonslip_pool: &[UniSignal<T>],
    slip_pool: &[UniSignal<T>],
    fs: f64,
    seed: u64,
    config: &SignificanceConfig,
) -> Result<SpectralReport, SpectralError> {
    let len = config.sequence_length.unwrap_or(fs.round() as usize);
    if len < 2 {
        return Err(SpectralError::EmptyInput(len));
    }
    let ns = StartSampler::new(nonslip_pool, len, "non-slip")?;
    let sl = StartSampler::new(slip_pool, len, "slip")?;
    let bins = len / 2 + 1;
    let n_boot = config.n_bootstrap;
    if n_boot < 5 {
        return Err(SpectralError::TooFewSamples(n_boot, n_boot));
    }
    let critical = ks_critical_value(config.c_alpha, n_boot, n_boot);

    let reps: Vec<Repetition<T>> = (0..config.n_repetitions)
        .into_par_iter()
        .map_init(
            || SpectrumAnalyzer::<T>::new(len).expect("len >= 2"),
            |analyzer, r| {
                let mut rng = rng_for(seed, "significance", &[r as u64]);
                let mut draw = |sampler: &StartSampler<T>| -> Vec<Vec<T>> {
                    (0..n_boot)
                        .map(|_| {
                            let seq = sampler.draw(&mut rng);
                            let mut out = Vec::with_capacity(bins);
                            analyzer.amplitudes_into(seq, &mut out).expect("finite pool");
                            out
                        })
                        .collect()
                };
                let nonslip = draw(&ns);
                let slip = draw(&sl);
                let mut col_a = vec![T::zero(); n_boot];
                let mut col_b = vec![T::zero(); n_boot];
                let verdicts = (0..bins)
                    .map(|k| {
                        for b in 0..n_boot {
                            col_a[b] = nonslip[b][k];
                            col_b[b] = slip[b][k];
                        }
                        col_a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                        col_b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                        ks_statistic_sorted(&col_a, &col_b) > critical
                    })
                    .collect();
                Repetition { verdicts, nonslip, slip }
            },
        )
        .collect();

    let n_rep = reps.len().max(1) as f64;
    let significance = (0..bins)
        .map(|k| reps.iter().filter(|r| r.verdicts[k]).count() as f64 / n_rep)
        .collect();
    let nonslip = class_bands(&reps, |r| &r.nonslip, bins);
    let slip = class_bands(&reps, |r| &r.slip, bins);
    Ok(SpectralReport {
        resolution_hz: fs / len as f64,
        sequence_length: len,
        nonslip,
        slip,
        significance,
        n_bootstrap: n_boot,
        n_repetitions: config.n_repetitions,
        seed,
    })
}

fn class_bands<T: Real>(
    reps: &[Repetition<T>],
    class: impl Fn(&Repetition<T>) -> &Vec<Vec<T>> + Sync,
    bins: usize,
) -> ClassBands {
    let per_bin: Vec<(f64, f64, f64)> = (0..bins)
        .into_par_iter()
        .map(|k| {
            let mut col: Vec<f64> = reps
                .iter()
                .flat_map(|r| class(r).iter().map(move |s| s[k].as_f64()))
                .collect();
            let mean = col.iter().sum::<f64>() / col.len().max(1) as f64;
            col.sort_by(f64::total_cmp);
            if col.is_empty() {
                return (0.0, 0.0, 0.0);
            }
            (mean, percentile_sorted(&col, 0.025), percentile_sorted(&col, 0.975))
        })
        .collect();
    ClassBands {
        mean: per_bin.iter().map(|p| p.0).collect(),
        lo95: per_bin.iter().map(|p| p.1).collect(),
        hi95: per_bin.iter().map(|p| p.2).collect(),
    }
}
