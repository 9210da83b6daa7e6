use super::{SpectralError, SpectralReport};

/// Closed frequency interval `[low_hz, high_hz]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self, SpectralError> {
        if !(low_hz >= 0.0 && low_hz < high_hz && high_hz.is_finite()) {
            return Err(SpectralError::InvalidBand(low_hz, high_hz));
        }
        Ok(Self { low_hz, high_hz })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low_hz && f <= self.high_hz
    }
}

/// Longest contiguous run of bins with significance `>= threshold`; ties go to
/// the lower run. A single-bin run widens to half a bin on either side.
pub fn most_significant_band(report: &SpectralReport, threshold: f64) -> Result<FrequencyBand, SpectralError> {
    let sig = &report.significance;
    let mut best: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < sig.len() {
        if sig[k] >= threshold {
            let start = k;
            while k + 1 < sig.len() && sig[k + 1] >= threshold {
                k += 1;
            }
            let better = match best {
                None => true,
                Some((s, e)) => k - start > e - s,
            };
            if better {
                best = Some((start, k));
            }
        }
        k += 1;
    }
    let (s, e) = best.ok_or(SpectralError::NoSignificantBand(threshold))?;
    let res = report.resolution_hz;
    if e > s {
        FrequencyBand::new(s as f64 * res, e as f64 * res)
    } else {
        let nyquist = (sig.len() - 1) as f64 * res;
        let c = s as f64 * res;
        FrequencyBand::new((c - res / 2.0).max(0.0), (c + res / 2.0).min(nyquist.max(res / 2.0)))
    }
}
