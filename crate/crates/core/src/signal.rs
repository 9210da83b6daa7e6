//! Collapse of multi-channel tactile frames into a univariate gradient stream,
//! plus percentile-based input normalization.
//!
//! The gradient stream is the lag-one difference of the per-frame l2 norm:
//! `s[t-1] = |a_t| - |a_{t-1}|`. It discards absolute force magnitude and
//! direction and keeps only changes in loading.

use thiserror::Error;

use crate::scalar::{percentile_sorted, sorted_copy, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("need at least 2 frames, got {0}")]
    EmptyInput(usize),
    #[error("frame {index} has {found} channels, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite sample in frame {0}")]
    NonFiniteSample(usize),
    #[error("signal of length {0} too short for percentile normalization (need >= 40)")]
    TooShort(usize),
    #[error("degenerate signal: 2.5th and 97.5th percentiles coincide at {0}")]
    DegenerateSignal(f64),
    #[error("invalid normalization stats: p_low {p_low} must be below p_high {p_high}")]
    InvalidStats { p_low: f64, p_high: f64 },
}

/// One multi-channel sensor reading.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector<T = f64> {
    pub values: Vec<T>,
    pub timestamp_index: u64,
}

impl<T: Real> SampleVector<T> {
    pub fn new(values: Vec<T>, timestamp_index: u64) -> Self {
        Self {
            values,
            timestamp_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// Collapsed univariate gradient signal.
#[derive(Debug, Clone, PartialEq)]
pub struct UniSignal<T = f64> {
    pub samples: Vec<T>,
    pub sampling_rate_hz: f64,
}

impl<T: Real> UniSignal<T> {
    pub fn new(samples: Vec<T>, sampling_rate_hz: f64) -> Self {
        Self {
            samples,
            sampling_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Validates frames and returns the common channel count.
pub fn check_frames<T: Real>(frames: &[SampleVector<T>]) -> Result<usize, SignalError> {
    if frames.len() < 2 {
        return Err(SignalError::EmptyInput(frames.len()));
    }
    let m = frames[0].dim();
    for (i, f) in frames.iter().enumerate() {
        if f.dim() != m || m == 0 {
            return Err(SignalError::DimensionMismatch {
                index: i,
                expected: m,
                found: f.dim(),
            });
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(SignalError::NonFiniteSample(i));
        }
    }
    Ok(m)
}

/// Lag-one difference of per-frame l2 norms. Output length is `frames.len() - 1`.
pub fn collapse_signal<T: Real>(
    frames: &[SampleVector<T>],
    sampling_rate_hz: f64,
) -> Result<UniSignal<T>, SignalError> {
    check_frames(frames)?;
    let norms: Vec<T> = frames.iter().map(SampleVector::l2_norm).collect();
    let samples = norms.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(UniSignal::new(samples, sampling_rate_hz))
}

/// Lower and upper percentile anchors used to scale network input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationStats<T = f64> {
    p_low: T,
    p_high: T,
}

impl<T: Real> NormalizationStats<T> {
    pub fn new(p_low: T, p_high: T) -> Result<Self, SignalError> {
        if !(p_low < p_high) || !p_low.is_finite() || !p_high.is_finite() {
            return Err(SignalError::InvalidStats {
                p_low: p_low.as_f64(),
                p_high: p_high.as_f64(),
            });
        }
        Ok(Self { p_low, p_high })
    }

    /// Identity-like stats mapping [-1, 1] onto itself.
    pub fn unit() -> Self {
        Self {
            p_low: -T::one(),
            p_high: T::one(),
        }
    }

    pub fn p_low(&self) -> T {
        self.p_low
    }

    pub fn p_high(&self) -> T {
        self.p_high
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        let two = T::lit(2.0);
        two * (x - self.p_low) / (self.p_high - self.p_low) - T::one()
    }

    #[inline]
    pub fn invert(&self, y: T) -> T {
        (y + T::one()) * (self.p_high - self.p_low) / T::lit(2.0) + self.p_low
    }

    pub fn cast<U: Real>(&self) -> NormalizationStats<U> {
        NormalizationStats {
            p_low: U::lit(self.p_low.as_f64()),
            p_high: U::lit(self.p_high.as_f64()),
        }
    }
}

/// Fits the 2.5th / 97.5th percentile anchors of a training signal.
pub fn fit_normalization<T: Real>(samples: &[T]) -> Result<NormalizationStats<T>, SignalError> {
    if samples.len() < 40 {
        return Err(SignalError::TooShort(samples.len()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        let idx = samples.iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(SignalError::NonFiniteSample(idx));
    }
    let sorted = sorted_copy(samples);
    let p_low = percentile_sorted(&sorted, 0.025);
    let p_high = percentile_sorted(&sorted, 0.975);
    if !(p_low < p_high) {
        return Err(SignalError::DegenerateSignal(p_low.as_f64()));
    }
    Ok(NormalizationStats { p_low, p_high })
}

/// Affine map sending `p_low -> -1`, `p_high -> +1`. Values are not clamped.
pub fn normalize<T: Real>(signal: &UniSignal<T>, stats: &NormalizationStats<T>) -> UniSignal<T> {
    UniSignal::new(
        signal.samples.iter().map(|&x| stats.apply(x)).collect(),
        signal.sampling_rate_hz,
    )
}

pub fn denormalize<T: Real>(signal: &UniSignal<T>, stats: &NormalizationStats<T>) -> UniSignal<T> {
    UniSignal::new(
        signal.samples.iter().map(|&y| stats.invert(y)).collect(),
        signal.sampling_rate_hz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frames(rows: &[&[f64]]) -> Vec<SampleVector> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| SampleVector::new(r.to_vec(), i as u64))
            .collect()
    }

    #[test]
    fn zero_to_three_four() {
        let s = collapse_signal(&frames(&[&[0.0, 0.0], &[3.0, 4.0]]), 1000.0).unwrap();
        assert_eq!(s.samples, vec![5.0]);
    }

    #[test]
    fn constant_frames_give_zero_gradient() {
        let f = frames(&[&[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0], &[1.0, 2.0, 2.0]]);
        assert_eq!(collapse_signal(&f, 1.0).unwrap().samples, vec![0.0, 0.0]);
    }

    #[test]
    fn random_frames_match_norm_then_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..6).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let f: Vec<SampleVector> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| SampleVector::new(r.clone(), i as u64))
            .collect();
        let got = collapse_signal(&f, 1000.0).unwrap();
        // oracle: explicit loops
        let mut norms = Vec::new();
        for r in &rows {
            let mut acc = 0.0;
            for v in r {
                acc += v * v;
            }
            norms.push(acc.sqrt());
        }
        assert_eq!(got.len(), 99);
        for t in 1..100 {
            assert_eq!(got.samples[t - 1], norms[t] - norms[t - 1]);
        }
    }

    #[test]
    fn frame_errors() {
        assert_eq!(
            collapse_signal(&frames(&[&[1.0]]), 1.0),
            Err(SignalError::EmptyInput(1))
        );
        assert!(matches!(
            collapse_signal(&frames(&[&[1.0], &[1.0, 2.0]]), 1.0),
            Err(SignalError::DimensionMismatch { index: 1, .. })
        ));
        assert_eq!(
            collapse_signal(&frames(&[&[1.0], &[f64::NAN]]), 1.0),
            Err(SignalError::NonFiniteSample(1))
        );
    }

    #[test]
    fn single_channel_is_first_difference_of_magnitude() {
        let f = frames(&[&[1.0], &[3.0], &[2.0]]);
        assert_eq!(collapse_signal(&f, 1.0).unwrap().samples, vec![2.0, -1.0]);
    }

    #[test]
    fn percentiles_of_ramp() {
        let v: Vec<f64> = (0..=1000).map(f64::from).collect();
        let st = fit_normalization(&v).unwrap();
        assert_eq!(st.p_low(), 25.0);
        assert_eq!(st.p_high(), 975.0);
    }

    #[test]
    fn single_outlier_is_degenerate() {
        let mut v = vec![0.0f64; 100];
        v[50] = 1e6;
        assert!(matches!(
            fit_normalization(&v),
            Err(SignalError::DegenerateSignal(_))
        ));
        assert!(matches!(
            fit_normalization(&[1.0f64; 10]),
            Err(SignalError::TooShort(10))
        ));
    }

    #[test]
    fn symmetric_signal_gives_symmetric_anchors() {
        let v: Vec<f64> = (-200..=200).map(|i| f64::from(i) * 0.37).collect();
        let st = fit_normalization(&v).unwrap();
        assert!((st.p_low() + st.p_high()).abs() < 1e-12);
    }

    #[test]
    fn normalize_endpoints_and_unclamped_extension() {
        let st = NormalizationStats::new(-3.0, 5.0).unwrap();
        let s = UniSignal::new(vec![-3.0, 5.0, 1.0, 9.0], 100.0);
        assert_eq!(normalize(&s, &st).samples, vec![-1.0, 1.0, 0.0, 2.0]);
        assert!(NormalizationStats::new(1.0, 1.0).is_err());
    }

    #[test]
    fn f32_path() {
        let f = vec![
            SampleVector::new(vec![0.0f32, 0.0], 0),
            SampleVector::new(vec![3.0f32, 4.0], 1),
        ];
        assert_eq!(collapse_signal(&f, 1.0).unwrap().samples, vec![5.0f32]);
    }

    proptest! {
        #[test]
        fn telescoping_sum(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 2..60)) {
            let f: Vec<SampleVector> = rows.iter().enumerate().map(|(i, r)| SampleVector::new(r.clone(), i as u64)).collect();
            let s = collapse_signal(&f, 1.0).unwrap();
            let total: f64 = s.samples.iter().sum();
            let expect = f.last().unwrap().l2_norm() - f[0].l2_norm();
            let scale = f.iter().map(|x| x.l2_norm()).fold(1.0, f64::max);
            prop_assert!((total - expect).abs() <= 1e-9 * scale);
        }

        #[test]
        fn offset_on_norm_stream_cancels(norms in prop::collection::vec(0.0f64..50.0, 2..40), c in 0.0f64..20.0) {
            // single-channel frames carry the norm directly
            let a: Vec<SampleVector> = norms.iter().enumerate().map(|(i, &n)| SampleVector::new(vec![n], i as u64)).collect();
            let b: Vec<SampleVector> = norms.iter().enumerate().map(|(i, &n)| SampleVector::new(vec![n + c], i as u64)).collect();
            let sa = collapse_signal(&a, 1.0).unwrap();
            let sb = collapse_signal(&b, 1.0).unwrap();
            for (x, y) in sa.samples.iter().zip(&sb.samples) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + norms.iter().cloned().fold(c, f64::max)));
            }
        }

        #[test]
        fn normalize_affine_and_round_trip(xs in prop::collection::vec(-1e3f64..1e3, 1..50),
                                           lo in -10.0f64..0.0, width in 0.1f64..20.0,
                                           alpha in 0.1f64..5.0, beta in -5.0f64..5.0) {
            let st = NormalizationStats::new(lo, lo + width).unwrap();
            let s = UniSignal::new(xs.clone(), 1.0);
            let n = normalize(&s, &st);
            let back = denormalize(&n, &st);
            for (x, y) in xs.iter().zip(&back.samples) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            // normalize(alpha x + beta) = normalize(x) * alpha + 2 (beta + (alpha - 1) p_low) / width
            let shifted = UniSignal::new(xs.iter().map(|x| alpha * x + beta).collect(), 1.0);
            let ns = normalize(&shifted, &st);
            for (a, b) in n.samples.iter().zip(&ns.samples) {
                let expect = alpha * a + (alpha - 1.0) + 2.0 * (beta + (alpha - 1.0) * lo) / width;
                let scale = (alpha * a).abs().max(expect.abs()).max(1.0);
                prop_assert!((b - expect).abs() <= 1e-12 * scale);
            }
        }
    }
}
