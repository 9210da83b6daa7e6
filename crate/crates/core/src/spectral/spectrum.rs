use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;
use crate::scalar::Real;

/// Single-sided amplitude spectrum of a real sequence.
///
/// Bin `k` sits at `k * resolution_hz`; a sinusoid of amplitude `A` on an
/// integer bin shows up as `A` in that bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum<T = f64> {
    pub amplitudes: Vec<T>,
    pub resolution_hz: f64,
    pub source_length: usize,
}

impl<T: Real> AmplitudeSpectrum<T> {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.resolution_hz
    }
}

/// Reusable planned FFT for one sequence length. Any length is supported.
pub struct SpectrumAnalyzer<T: Real> {
    len: usize,
    fft: Arc<dyn Fft<T>>,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> SpectrumAnalyzer<T> {
    pub fn new(len: usize) -> Result<Self, SpectralError> {
        if len < 2 {
            return Err(SpectralError::EmptyInput(len));
        }
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        Ok(Self {
            len,
            fft,
            buffer: vec![Complex::new(T::zero(), T::zero()); len],
            scratch,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Two-sided DFT of `x`, left in the internal buffer.
    pub fn dft(&mut self, x: &[T]) -> Result<&[Complex<T>], SpectralError> {
        if x.len() != self.len {
            return Err(SpectralError::EmptyInput(x.len()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        for (b, &v) in self.buffer.iter_mut().zip(x) {
            *b = Complex::new(v, T::zero());
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        Ok(&self.buffer)
    }

    /// Single-sided amplitudes into `out` (length `len / 2 + 1`).
    pub fn amplitudes_into(&mut self, x: &[T], out: &mut Vec<T>) -> Result<(), SpectralError> {
        let len = self.len;
        let spec = self.dft(x)?;
        let l = T::from_usize_lossy(len);
        let two = T::lit(2.0);
        out.clear();
        out.extend((0..=len / 2).map(|k| {
            let mag = spec[k].norm();
            if k == 0 || (len % 2 == 0 && k == len / 2) {
                mag / l
            } else {
                two * mag / l
            }
        }));
        Ok(())
    }

    pub fn spectrum(&mut self, x: &[T], fs: f64) -> Result<AmplitudeSpectrum<T>, SpectralError> {
        let mut amps = Vec::with_capacity(self.len / 2 + 1);
        self.amplitudes_into(x, &mut amps)?;
        Ok(AmplitudeSpectrum {
            amplitudes: amps,
            resolution_hz: fs / self.len as f64,
            source_length: self.len,
        })
    }
}

/// Rectangular-window single-sided amplitude spectrum of `x` sampled at `fs`.
pub fn amplitude_spectrum<T: Real>(x: &[T], fs: f64) -> Result<AmplitudeSpectrum<T>, SpectralError> {
    SpectrumAnalyzer::new(x.len())?.spectrum(x, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// O(L^2) reference DFT.
    fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (t, &v) in x.iter().enumerate() {
                    let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                (re, im)
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_on_awkward_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &n in &[2usize, 3, 7, 50, 97, 850, 1000] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut an = SpectrumAnalyzer::new(n).unwrap();
            let fast: Vec<_> = an.dft(&x).unwrap().to_vec();
            for (k, (re, im)) in naive_dft(&x).into_iter().enumerate() {
                assert!((fast[k].re - re).abs() < 1e-9 * n as f64, "n={n} k={k}");
                assert!((fast[k].im - im).abs() < 1e-9 * n as f64, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn integer_periodic_sine() {
        let x: Vec<f64> = (0..1000).map(|t| 3.0 * (2.0 * PI * 60.0 * t as f64 / 1000.0).sin()).collect();
        let s = amplitude_spectrum(&x, 1000.0).unwrap();
        assert_eq!(s.amplitudes.len(), 501);
        assert_eq!(s.resolution_hz, 1.0);
        for (k, a) in s.amplitudes.iter().enumerate() {
            if k == 60 {
                assert!((a - 3.0).abs() <= 1e-9);
            } else {
                assert!(*a <= 1e-9, "bin {k} = {a}");
            }
        }
    }

    #[test]
    fn dc_and_zero() {
        let s = amplitude_spectrum(&[-2.5f64; 64], 64.0).unwrap();
        assert!((s.amplitudes[0] - 2.5).abs() < 1e-12);
        assert!(s.amplitudes[1..].iter().all(|a| *a < 1e-12));
        let z = amplitude_spectrum(&[0.0f64; 10], 10.0).unwrap();
        assert!(z.amplitudes.iter().all(|a| *a == 0.0));
        assert_eq!(amplitude_spectrum(&[1.0f64], 1.0).unwrap_err(), SpectralError::EmptyInput(1));
    }

    #[test]
    fn nyquist_bin_scaling() {
        // alternating +1 / -1 is a full-amplitude Nyquist tone
        let x: Vec<f64> = (0..8).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = amplitude_spectrum(&x, 8.0).unwrap();
        assert!((s.amplitudes[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_spectrum() {
        let x: Vec<f32> = (0..100).map(|t| (2.0 * std::f32::consts::PI * 5.0 * t as f32 / 100.0).cos()).collect();
        let s = amplitude_spectrum(&x, 100.0).unwrap();
        assert!((s.amplitudes[5] - 1.0).abs() < 1e-4);
    }
}
