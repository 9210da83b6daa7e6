//! Amplitude-threshold slip classifier.
//!
//! A window's band energy is the sum of its single-sided spectrum amplitudes
//! over the bins whose center frequency lies inside a band (typically the most
//! significant band of a spectral report). The threshold sits at the merged
//! sample point where the class-wise empirical CDFs of those sums are furthest
//! apart; energies strictly above it are called slip.
//!
//! For reference, published thresholds for the physical sensors were
//! 0.0015 N, 3.5 units and 25 units; they depend on the hardware and are not
//! used as test values here.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::balance::Label;
use crate::scalar::sorted_copy;
use crate::spectral::{FrequencyBand, SpectralError, SpectrumAnalyzer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("no spectrum bin of a length-{len} window at {fs} Hz lies in [{low}, {high}] Hz")]
    EmptyBand { len: usize, fs: f64, low: f64, high: f64 },
    #[error("threshold calibration needs >= 10 sums per class, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("window length {found} does not match model window {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("threshold record: {0}")]
    Parse(String),
}

/// Reusable band-energy evaluator for one window length.
pub struct BandEnergy {
    analyzer: SpectrumAnalyzer<f64>,
    bins: Vec<usize>,
    amps: Vec<f64>,
}

impl BandEnergy {
    pub fn new(len: usize, band: FrequencyBand, fs: f64) -> Result<Self, BaselineError> {
        let analyzer = SpectrumAnalyzer::new(len)?;
        let spacing = fs / len as f64;
        let bins: Vec<usize> = (0..=len / 2).filter(|&k| band.contains(k as f64 * spacing)).collect();
        if bins.is_empty() {
            return Err(BaselineError::EmptyBand {
                len,
                fs,
                low: band.low_hz,
                high: band.high_hz,
            });
        }
        Ok(Self {
            analyzer,
            bins,
            amps: Vec::new(),
        })
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn energy(&mut self, window: &[f64]) -> Result<f64, BaselineError> {
        self.analyzer.amplitudes_into(window, &mut self.amps)?;
        Ok(self.bins.iter().map(|&k| self.amps[k]).sum())
    }
}

/// Sum of amplitude-spectrum bins of `window` inside `band`. Bin spacing is
/// `fs / window.len()`.
pub fn band_energy(window: &[f64], band: FrequencyBand, fs: f64) -> Result<f64, BaselineError> {
    BandEnergy::new(window.len(), band, fs)?.energy(window)
}

/// Point of maximal ECDF separation, smallest such point on ties.
pub fn calibrate_threshold(nonslip_sums: &[f64], slip_sums: &[f64]) -> Result<f64, BaselineError> {
    if nonslip_sums.len() < 10 || slip_sums.len() < 10 {
        return Err(BaselineError::TooFewSamples(nonslip_sums.len(), slip_sums.len()));
    }
    let a = sorted_copy(nonslip_sums);
    let b = sorted_copy(slip_sums);
    let mut merged: Vec<f64> = a.iter().chain(&b).copied().collect();
    merged.sort_by(f64::total_cmp);
    merged.dedup();
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, merged[0]);
    for &x in &merged {
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / n - j as f64 / m).abs();
        if gap > best.0 {
            best = (gap, x);
        }
    }
    Ok(best.1)
}

/// Calibrated threshold classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdModel {
    pub band: FrequencyBand,
    pub threshold: f64,
    pub window_size: usize,
    pub sampling_rate_hz: f64,
}

impl ThresholdModel {
    /// Slip iff band energy is strictly above the threshold.
    pub fn classify(&self, window: &[f64]) -> Result<Label, BaselineError> {
        if window.len() != self.window_size {
            return Err(BaselineError::LengthMismatch {
                expected: self.window_size,
                found: window.len(),
            });
        }
        let e = band_energy(window, self.band, self.sampling_rate_hz)?;
        Ok(self.decide(e))
    }

    pub fn decide(&self, energy: f64) -> Label {
        if energy > self.threshold {
            Label::Slip
        } else {
            Label::NonSlip
        }
    }
}

pub fn classify_threshold(model: &ThresholdModel, window: &[f64]) -> Result<Label, BaselineError> {
    model.classify(window)
}

/// Computes band energies of every window, fits the threshold and returns the
/// model. Windows must share one length.
pub fn fit_threshold_model<'a>(
    windows: impl IntoIterator<Item = (&'a [f64], Label)>,
    band: FrequencyBand,
    fs: f64,
) -> Result<ThresholdModel, BaselineError> {
    let mut ns = Vec::new();
    let mut sl = Vec::new();
    let mut energy: Option<BandEnergy> = None;
    let mut window_size = 0;
    for (w, label) in windows {
        if energy.is_none() {
            window_size = w.len();
            energy = Some(BandEnergy::new(w.len(), band, fs)?);
        }
        if w.len() != window_size {
            return Err(BaselineError::LengthMismatch {
                expected: window_size,
                found: w.len(),
            });
        }
        let e = energy.as_mut().expect("initialized").energy(w)?;
        match label {
            Label::NonSlip => ns.push(e),
            Label::Slip => sl.push(e),
        }
    }
    let threshold = calibrate_threshold(&ns, &sl)?;
    Ok(ThresholdModel {
        band,
        threshold,
        window_size,
        sampling_rate_hz: fs,
    })
}

/// One-line record `band_low,band_high,threshold,window_size,fs_hz`.
impl fmt::Display for ThresholdModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:e},{:e},{:e},{},{:e}",
            self.band.low_hz, self.band.high_hz, self.threshold, self.window_size, self.sampling_rate_hz
        )
    }
}

impl FromStr for ThresholdModel {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let line = s
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .ok_or_else(|| BaselineError::Parse("empty record".into()))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(BaselineError::Parse(format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, BaselineError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| BaselineError::Parse(format!("field {} '{}' is not a number", i + 1, fields[i])))
        };
        let band = FrequencyBand::new(num(0)?, num(1)?)?;
        let threshold = num(2)?;
        if !threshold.is_finite() {
            return Err(BaselineError::Parse("threshold must be finite".into()));
        }
        let window_size = fields[3]
            .parse()
            .map_err(|_| BaselineError::Parse(format!("window '{}' is not an integer", fields[3])))?;
        Ok(Self {
            band,
            threshold,
            window_size,
            sampling_rate_hz: num(4)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ks_statistic;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn band(lo: f64, hi: f64) -> FrequencyBand {
        FrequencyBand::new(lo, hi).unwrap()
    }

    #[test]
    fn short_window_sine_energy() {
        let w: Vec<f64> = (0..50).map(|t| 2.0 * (2.0 * PI * 60.0 * t as f64 / 1000.0).sin()).collect();
        // oracle: direct DFT sums over bins 0, 20, .., 100 Hz
        let mut want = 0.0;
        for k in 0..=5usize {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in w.iter().enumerate() {
                let a = -2.0 * PI * (k * t) as f64 / 50.0;
                re += v * a.cos();
                im += v * a.sin();
            }
            let mag = (re * re + im * im).sqrt() / 50.0;
            want += if k == 0 { mag } else { 2.0 * mag };
        }
        let e = band_energy(&w, band(0.0, 100.0), 1000.0).unwrap();
        assert!((e - want).abs() < 1e-10);
        assert!(e >= 1.5);
        assert_eq!(band_energy(&[0.0; 50], band(0.0, 100.0), 1000.0).unwrap(), 0.0);
        assert!(matches!(
            band_energy(&w, band(600.0, 700.0), 1000.0),
            Err(BaselineError::EmptyBand { .. })
        ));
    }

    #[test]
    fn disjoint_clusters() {
        let ns: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let sl: Vec<f64> = (0..=20).map(|i| 2.0 + i as f64 / 20.0).collect();
        let t = calibrate_threshold(&ns, &sl).unwrap();
        assert_eq!(t, 1.0);
        let m = ThresholdModel {
            band: band(0.0, 1.0),
            threshold: t,
            window_size: 4,
            sampling_rate_hz: 4.0,
        };
        assert!(ns.iter().all(|&e| m.decide(e) == Label::NonSlip));
        assert!(sl.iter().all(|&e| m.decide(e) == Label::Slip));
    }

    #[test]
    fn boundary_is_strict() {
        let m = ThresholdModel {
            band: band(0.0, 1.0),
            threshold: 0.5,
            window_size: 4,
            sampling_rate_hz: 4.0,
        };
        assert_eq!(m.decide(0.5), Label::NonSlip);
        assert_eq!(m.decide(0.5 + 1e-12), Label::Slip);
        assert!(matches!(m.classify(&[0.0; 3]), Err(BaselineError::LengthMismatch { .. })));
    }

    #[test]
    fn gaussian_gap_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Normal::new(0.0, 1.0).unwrap();
        let b = Normal::new(2.0, 1.0).unwrap();
        let ns: Vec<f64> = (0..4000).map(|_| a.sample(&mut rng)).collect();
        let sl: Vec<f64> = (0..4000).map(|_| b.sample(&mut rng)).collect();
        let t = calibrate_threshold(&ns, &sl).unwrap();
        // grid search of the empirical gap at 1e-3 spacing
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        let mut best = (0.0, 0.0);
        let mut x = -3.0;
        while x <= 5.0 {
            let g = (ecdf(&ns, x) - ecdf(&sl, x)).abs();
            if g > best.0 {
                best = (g, x);
            }
            x += 1e-3;
        }
        assert!((t - best.1).abs() < 0.1, "threshold {t}, grid {}", best.1);
        // analytic maximizer of the population gap is the midpoint
        assert!((t - 1.0).abs() < 0.2);
    }

    #[test]
    fn identical_distributions_are_uninformative() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let d = Normal::new(1.0, 1.0).unwrap();
        let ns: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        let sl: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        let t = calibrate_threshold(&ns, &sl).unwrap();
        let tn: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        let ts: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        let correct = tn.iter().filter(|&&e| e <= t).count() + ts.iter().filter(|&&e| e > t).count();
        let acc = correct as f64 / 4000.0;
        assert!((acc - 0.5).abs() < 0.05, "accuracy {acc}");
    }

    #[test]
    fn record_round_trip() {
        let m = ThresholdModel {
            band: band(0.0, 100.0),
            threshold: 0.012_345_678_9,
            window_size: 50,
            sampling_rate_hz: 1000.0,
        };
        let text = format!("# band_low,band_high,threshold,window_size,fs_hz\n{m}\n");
        assert_eq!(text.parse::<ThresholdModel>().unwrap(), m);
        assert!("1,2,3".parse::<ThresholdModel>().is_err());
    }

    proptest! {
        #[test]
        fn threshold_properties(ns in prop::collection::vec(-50.0f64..50.0, 10..60),
                                sl in prop::collection::vec(-50.0f64..50.0, 10..60),
                                alpha in 0.1f64..10.0) {
            let t = calibrate_threshold(&ns, &sl).unwrap();
            let lo = ns.iter().chain(&sl).cloned().fold(f64::INFINITY, f64::min);
            let hi = ns.iter().chain(&sl).cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(t >= lo && t <= hi);
            // gap at the threshold is the KS statistic
            let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
            let gap = (ecdf(&ns, t) - ecdf(&sl, t)).abs();
            prop_assert!((gap - ks_statistic(&ns, &sl)).abs() < 1e-12);
            // scale equivariance
            let ns2: Vec<f64> = ns.iter().map(|v| v * alpha).collect();
            let sl2: Vec<f64> = sl.iter().map(|v| v * alpha).collect();
            let t2 = calibrate_threshold(&ns2, &sl2).unwrap();
            prop_assert!((t2 - alpha * t).abs() <= 1e-9 * (1.0 + t.abs() * alpha));
            for &e in ns.iter().chain(&sl) {
                prop_assert_eq!(e > t, e * alpha > t2);
            }
        }
    }
}
