//! Seeded synthetic stick-slip recordings.
//!
//! Each recording is a force trace seen through `m` channels:
//! `a_c(t) = bias_c + gain_c * F(t) + noise_c(t)`. The force trace holds
//!
//! * free space: an idle vibration tone (arm drive) with slow amplitude
//!   jitter;
//! * push: the idle tone plus a contact preload, slow force ramps
//!   (0.1 to 2 Hz), material texture noise and occasional contact taps
//!   (sharp force steps);
//! * slip: the push trace plus Poisson-timed damped oscillations at the
//!   material's catch-and-snap resonance, scaled by
//!   `(speed / 25)^exponent * burst_gain`.
//!
//! Everything is a pure function of the arguments and the seed.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::balance::{
    validate_combination, BalanceError, Finger, Material, Recording, Scenario, FREE_SPACE_SPEEDS, SLIP_SPEEDS,
};
use crate::seed::{derive_seed, rng_for};
use crate::signal::SampleVector;

/// Shortest corpus cell must hold two windows of this many samples.
pub const LARGEST_WINDOW: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid combination: {0}")]
    InvalidCombination(String),
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Recording(#[from] BalanceError),
}

/// Friction signature of one contact material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialProfile {
    pub material: Material,
    /// Mean stick-slip event rate.
    pub burst_rate_hz: f64,
    pub burst_center_hz: f64,
    /// Sets the burst decay rate (`pi * bandwidth` per second).
    pub burst_bandwidth_hz: f64,
    pub burst_gain: f64,
    /// Texture noise on the force trace while in contact.
    pub noise_floor: f64,
    pub texture_seed_offset: u64,
}

impl MaterialProfile {
    pub fn new(material: Material, burst_rate_hz: f64, burst_bandwidth_hz: f64, burst_gain: f64) -> Self {
        Self {
            material,
            burst_rate_hz,
            burst_center_hz: 65.0,
            burst_bandwidth_hz,
            burst_gain,
            noise_floor: 0.001,
            texture_seed_offset: material as u64,
        }
    }
}

/// The five default materials. Neoprene is the low-gain outlier.
pub fn default_profiles() -> Vec<MaterialProfile> {
    vec![
        MaterialProfile::new(Material::Aluminum, 40.0, 12.0, 1.0),
        MaterialProfile::new(Material::Pvc, 36.0, 14.0, 0.9),
        MaterialProfile::new(Material::Neoprene, 28.0, 20.0, 0.45),
        MaterialProfile::new(Material::Cardboard, 44.0, 16.0, 0.8),
        MaterialProfile::new(Material::Plywood, 48.0, 18.0, 1.1),
    ]
}

/// One physical sensor instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorProfile {
    pub sensor_id: String,
    pub finger: Finger,
    /// Overall transduction gain.
    pub gain: f64,
}

impl SensorProfile {
    pub fn new(sensor_id: impl Into<String>, finger: Finger, gain: f64) -> Self {
        Self {
            sensor_id: sensor_id.into(),
            finger,
            gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub fs_hz: f64,
    pub duration_s: f64,
    pub channels: usize,
    pub idle_vibration_hz: f64,
    pub idle_gain: f64,
    /// Slip amplitude scales as `(speed / 25)^exponent`.
    pub speed_amplitude_exponent: f64,
    /// Base amplitude of a slip burst before material and speed scaling.
    pub burst_amplitude: f64,
    /// Per-channel sensor noise standard deviation.
    pub sensor_noise: f64,
    /// Contact preload during push and slip.
    pub preload: f64,
    pub tap_rate_hz: f64,
    pub tap_gain: f64,
    /// Range of the random-walk jitter step deviation in push and free-space
    /// (gripper force control, arm motion). Drawn log-uniformly per segment.
    pub jitter_low: f64,
    pub jitter_high: f64,
    /// Mean jitter segment length.
    pub jitter_segment_s: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fs_hz: 1000.0,
            duration_s: 10.0,
            channels: 3,
            idle_vibration_hz: 200.0,
            idle_gain: 0.004,
            speed_amplitude_exponent: 0.5,
            burst_amplitude: 0.05,
            sensor_noise: 0.002,
            preload: 2.0,
            tap_rate_hz: 4.0,
            tap_gain: 0.02,
            jitter_low: 0.001,
            jitter_high: 0.01,
            jitter_segment_s: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(self.fs_hz > 0.0) || self.channels == 0 {
            return bad(format!("fs {} Hz, channels {}", self.fs_hz, self.channels));
        }
        if !(self.duration_s * self.fs_hz >= 2.0) {
            return Err(SynthError::InvalidCombination(format!(
                "duration {} s at {} Hz yields fewer than 2 frames",
                self.duration_s, self.fs_hz
            )));
        }
        if !(self.idle_vibration_hz > 0.0 && self.idle_vibration_hz < self.fs_hz / 2.0) {
            return bad(format!("idle vibration {} Hz must lie below Nyquist", self.idle_vibration_hz));
        }
        if [self.idle_gain, self.burst_amplitude, self.sensor_noise, self.tap_rate_hz, self.tap_gain, self.preload, self.jitter_low, self.jitter_segment_s]
            .iter()
            .any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return bad("gains, rates and noise levels must be finite and non-negative".into());
        }
        Ok(())
    }
}

fn exp_sampler(rate: f64) -> Option<Exp<f64>> {
    (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"))
}

/// Adds Poisson-timed damped oscillations to `force`.
fn add_bursts<R: Rng>(force: &mut [f64], fs: f64, profile: &MaterialProfile, amplitude: f64, rng: &mut R) {
    let Some(gap) = exp_sampler(profile.burst_rate_hz) else { return };
    let decay = PI * profile.burst_bandwidth_hz;
    let span = ((5.0 / decay) * fs).ceil() as usize;
    let n = force.len();
    // start before t = 0 so the head of the recording is not burst-free
    let mut t = -5.0 / decay;
    loop {
        t += gap.sample(rng);
        let start = (t * fs).ceil();
        if start >= n as f64 {
            break;
        }
        let amp = amplitude * rng.random_range(0.5..1.5);
        let f = profile.burst_center_hz * rng.random_range(0.95..1.05);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let first = start.max(0.0) as usize;
        let last = ((start + span as f64) as usize).min(n);
        for (k, v) in force.iter_mut().enumerate().take(last).skip(first) {
            let tau = k as f64 / fs - t;
            *v += sign * amp * (-decay * tau).exp() * (2.0 * PI * f * tau).sin();
        }
    }
}

/// Leaky random-walk force jitter with a piecewise-constant, log-uniform step size.
fn add_jitter<R: Rng>(force: &mut [f64], cfg: &SynthConfig, rng: &mut R) {
    let (lo, hi) = (cfg.jitter_low.max(f64::MIN_POSITIVE).ln(), cfg.jitter_high.ln());
    let seg = exp_sampler(1.0 / cfg.jitter_segment_s.max(1e-3)).expect("positive rate");
    let step = StandardNormal;
    let mut level = 0.0;
    let mut sigma = 0.0;
    let mut next = 0.0;
    for (k, v) in force.iter_mut().enumerate() {
        let now = k as f64 / cfg.fs_hz;
        if now >= next {
            sigma = if hi > lo { rng.random_range(lo..hi).exp() } else { hi.exp() };
            next = now + seg.sample(rng);
        }
        let e: f64 = step.sample(rng);
        level = 0.99 * level + sigma * e;
        *v += level;
    }
}

fn check_combination(scenario: Scenario, material: Option<&MaterialProfile>, speed_mm_s: u32) -> Result<(), SynthError> {
    let m = material.map_or(Material::None, |p| p.material);
    validate_combination(scenario, m, speed_mm_s).map_err(SynthError::InvalidCombination)
}

/// Generates one recording. `cfg.seed` selects the random stream.
pub fn generate_recording(
    scenario: Scenario,
    material: Option<&MaterialProfile>,
    speed_mm_s: u32,
    sensor: &SensorProfile,
    cfg: &SynthConfig,
) -> Result<Recording, SynthError> {
    cfg.validate()?;
    check_combination(scenario, material, speed_mm_s)?;
    if let Some(p) = material {
        if !(p.burst_center_hz > 0.0 && p.burst_center_hz < cfg.fs_hz / 2.0) {
            return Err(SynthError::InvalidConfig(format!(
                "burst center {} Hz must lie below Nyquist",
                p.burst_center_hz
            )));
        }
        if !(p.burst_rate_hz >= 0.0 && p.burst_bandwidth_hz > 0.0 && p.burst_gain >= 0.0 && p.noise_floor >= 0.0) {
            return Err(SynthError::InvalidConfig("material rates and gains must be positive".into()));
        }
    }
    let fs = cfg.fs_hz;
    let n = (cfg.duration_s * fs).round() as usize;
    let mut rng = rng_for(cfg.seed, "recording", &[]);

    // idle vibration with slow amplitude jitter
    let idle_phase = rng.random_range(0.0..2.0 * PI);
    let jitter_f = rng.random_range(0.2..1.0);
    let jitter_phase = rng.random_range(0.0..2.0 * PI);
    let mut force: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            let env = 1.0 + 0.1 * (2.0 * PI * jitter_f * t + jitter_phase).sin();
            cfg.idle_gain * env * (2.0 * PI * cfg.idle_vibration_hz * t + idle_phase).sin()
        })
        .collect();

    if scenario != Scenario::FreeSpace {
        let profile = material.expect("contact scenarios carry a material");
        let ramps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.1..1.0),
                    rng.random_range(0.05..0.3),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let mut texture = rng_for(cfg.seed, "texture", &[profile.texture_seed_offset]);
        let tex = Normal::new(0.0, profile.noise_floor.max(f64::MIN_POSITIVE)).expect("valid std");
        for (k, v) in force.iter_mut().enumerate() {
            let t = k as f64 / fs;
            *v += cfg.preload;
            for &(f, a, ph) in &ramps {
                *v += a * (2.0 * PI * f * t + ph).sin();
            }
            if profile.noise_floor > 0.0 {
                *v += tex.sample(&mut texture);
            }
        }
        // contact taps: sharp steps in force
        if let Some(gap) = exp_sampler(cfg.tap_rate_hz) {
            let mut level = 0.0;
            let mut next = gap.sample(&mut rng);
            for (k, v) in force.iter_mut().enumerate() {
                let now = k as f64 / fs;
                while now >= next {
                    level += cfg.tap_gain * rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    next += gap.sample(&mut rng);
                }
                *v += level;
            }
        }
        if scenario == Scenario::Slip {
            let speed_factor = (f64::from(speed_mm_s) / 25.0).powf(cfg.speed_amplitude_exponent);
            let amplitude = cfg.burst_amplitude * profile.burst_gain * speed_factor;
            let mut bursts = rng_for(cfg.seed, "bursts", &[]);
            add_bursts(&mut force, fs, profile, amplitude, &mut bursts);
        }
    }

    if scenario != Scenario::Slip && cfg.jitter_high > 0.0 {
        add_jitter(&mut force, cfg, &mut rng_for(cfg.seed, "jitter", &[]));
    }

    let noise = Normal::new(0.0, cfg.sensor_noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let mixing: Vec<(f64, f64)> = (0..cfg.channels)
        .map(|_| (rng.random_range(0.5..1.5), sensor.gain * rng.random_range(0.7..1.3)))
        .collect();
    let frames = force
        .iter()
        .enumerate()
        .map(|(k, &fv)| {
            let values = mixing
                .iter()
                .map(|&(bias, g)| {
                    let e = if cfg.sensor_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    bias + g * fv + e
                })
                .collect();
            SampleVector::new(values, k as u64)
        })
        .collect();
    Ok(Recording::new(
        frames,
        fs,
        scenario,
        material.map_or(Material::None, |p| p.material),
        speed_mm_s,
        sensor.sensor_id.clone(),
        sensor.finger,
    )?)
}

/// Duration multiplier per scenario so every slip window survives balancing:
/// push cells must supply twice a slip cell, free-space cells 10/3 of one.
pub fn duration_factor(scenario: Scenario) -> f64 {
    match scenario {
        Scenario::Slip => 1.0,
        Scenario::Push => 2.0,
        Scenario::FreeSpace => 3.5,
    }
}

/// Full factor grid per sensor: 5 x 4 slip cells, 5 push cells and 3
/// free-space cells. Cell seeds derive from the root seed and the cell
/// coordinates.
pub fn generate_corpus(
    materials: &[MaterialProfile],
    cfg: &SynthConfig,
    per_cell_duration_s: f64,
    sensors: &[SensorProfile],
    seed: u64,
) -> Result<Vec<Recording>, SynthError> {
    if per_cell_duration_s * cfg.fs_hz < (2 * LARGEST_WINDOW) as f64 {
        return Err(SynthError::InvalidConfig(format!(
            "per-cell duration {per_cell_duration_s} s is shorter than two {LARGEST_WINDOW}-sample windows"
        )));
    }
    if materials.is_empty() || sensors.is_empty() {
        return Err(SynthError::InvalidConfig("need at least one material and one sensor".into()));
    }
    let mut jobs: Vec<(usize, Scenario, Option<&MaterialProfile>, u32)> = Vec::new();
    for (si, _) in sensors.iter().enumerate() {
        for p in materials {
            for &s in &SLIP_SPEEDS {
                jobs.push((si, Scenario::Slip, Some(p), s));
            }
        }
        for p in materials {
            jobs.push((si, Scenario::Push, Some(p), 0));
        }
        for &s in &FREE_SPACE_SPEEDS {
            jobs.push((si, Scenario::FreeSpace, None, s));
        }
    }
    jobs.par_iter()
        .map(|&(si, scenario, material, speed)| {
            let coords = [
                si as u64,
                scenario as u64,
                material.map_or(Material::None, |p| p.material) as u64,
                u64::from(speed),
            ];
            let cell_cfg = SynthConfig {
                duration_s: per_cell_duration_s * duration_factor(scenario),
                seed: derive_seed(seed, "synth-cell", &coords),
                ..cfg.clone()
            };
            generate_recording(scenario, material, speed, &sensors[si], &cell_cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::amplitude_spectrum;

    fn sensor() -> SensorProfile {
        SensorProfile::new("s0", Finger::Index, 1.0)
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn free_space_shows_idle_peak() {
        let cfg = SynthConfig {
            duration_s: 10.0,
            seed: 3,
            ..SynthConfig::default()
        };
        let r = generate_recording(Scenario::FreeSpace, None, 50, &sensor(), &cfg).unwrap();
        let s = r.collapse();
        let spec = amplitude_spectrum(&s[..9000], 1000.0).unwrap();
        // 9000 samples at 1000 Hz: bin spacing 1/9 Hz, 200 Hz is bin 1800
        let peak = spec.amplitudes[1795..=1805].iter().cloned().fold(0.0, f64::max);
        let mut sorted = spec.amplitudes.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(peak >= 5.0 * median, "peak {peak} median {median}");
    }

    #[test]
    fn faster_slip_is_louder() {
        let profiles = default_profiles();
        let cfg = SynthConfig {
            duration_s: 5.0,
            seed: 17,
            ..SynthConfig::default()
        };
        let slow = generate_recording(Scenario::Slip, Some(&profiles[0]), 5, &sensor(), &cfg).unwrap();
        let fast = generate_recording(Scenario::Slip, Some(&profiles[0]), 75, &sensor(), &cfg).unwrap();
        assert!(rms(&fast.collapse()) > rms(&slow.collapse()));
    }

    #[test]
    fn invalid_inputs() {
        let p = default_profiles();
        let zero = SynthConfig {
            duration_s: 0.0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate_recording(Scenario::FreeSpace, None, 25, &sensor(), &zero),
            Err(SynthError::InvalidCombination(_))
        ));
        let cfg = SynthConfig::default();
        assert!(matches!(
            generate_recording(Scenario::FreeSpace, Some(&p[0]), 25, &sensor(), &cfg),
            Err(SynthError::InvalidCombination(_))
        ));
        assert!(matches!(
            generate_recording(Scenario::Slip, None, 25, &sensor(), &cfg),
            Err(SynthError::InvalidCombination(_))
        ));
    }

    #[test]
    fn corpus_grid_and_determinism() {
        let cfg = SynthConfig::default();
        let sensors = [sensor(), SensorProfile::new("s1", Finger::Middle, 1.0)];
        let a = generate_corpus(&default_profiles(), &cfg, 0.5, &sensors, 4).unwrap();
        assert_eq!(a.len(), 2 * (20 + 5 + 3));
        let b = generate_corpus(&default_profiles(), &cfg, 0.5, &sensors, 4).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&default_profiles(), &cfg, 0.5, &sensors, 5).unwrap();
        assert_ne!(a, c);
        assert!(generate_corpus(&default_profiles(), &cfg, 0.1, &sensors, 4).is_err());
    }
}
