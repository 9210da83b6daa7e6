//! Slip-detection calibration toolkit.
//!
//! Multi-channel tactile recordings are collapsed into a univariate gradient
//! stream ([`signal`]), cut into proportion-balanced windows ([`balance`]),
//! characterized spectrally ([`spectral`]) and classified with a from-scratch
//! LSTM ([`lstm`]) or an amplitude-threshold baseline ([`baseline`]). The
//! [`eval`] module runs the measurement sweeps; [`synth`] generates seeded
//! stick-slip data and [`io`] handles files and configuration.
//!
//! Numeric code is generic over [`Real`] (`f32` / `f64`); the aliases below
//! fix the common instantiations.

pub mod balance;
pub mod eval;
pub mod io;
pub mod baseline;
pub mod lstm;
pub mod scalar;
pub mod seed;
pub mod signal;
pub mod spectral;
pub mod synth;

pub use scalar::Real;

pub type Model = lstm::LstmModel<f64>;
pub type Model32 = lstm::LstmModel<f32>;
pub type Params = lstm::LstmParams<f64>;
pub type Params32 = lstm::LstmParams<f32>;
pub type Signal = signal::UniSignal<f64>;
pub type Signal32 = signal::UniSignal<f32>;
pub type Stats = signal::NormalizationStats<f64>;
pub type Spectrum = spectral::AmplitudeSpectrum<f64>;
pub type Spectrum32 = spectral::AmplitudeSpectrum<f32>;
