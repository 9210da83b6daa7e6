//! Amplitude spectra, two-sample KS testing and bootstrap significance
//! analysis between non-slip and slip signal pools.

mod band;
mod ks;
mod significance;
mod spectrum;

pub use band::{most_significant_band, FrequencyBand};
pub use ks::{ks_critical_value, ks_statistic, ks_two_sample, KsOutcome, KS_C_ALPHA_05};
pub use significance::{significance_analysis, ClassBands, SignificanceConfig, SpectralReport};
pub use spectrum::{amplitude_spectrum, AmplitudeSpectrum, SpectrumAnalyzer};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("sequence of length {0} is too short for a spectrum (need >= 2)")]
    EmptyInput(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("KS test needs at least 5 samples per side, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("{class} pool has no signal of length >= {needed}")]
    PoolTooShort { class: &'static str, needed: usize },
    #[error("no bin reaches significance {0}")]
    NoSignificantBand(f64),
    #[error("invalid band [{0}, {1}]")]
    InvalidBand(f64, f64),
}
