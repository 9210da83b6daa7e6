use super::SpectralError;
use crate::scalar::{sorted_copy, Real};

/// Asymptotic two-sample critical coefficient at alpha = 0.05.
pub const KS_C_ALPHA_05: f64 = 1.358;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// `c * sqrt((n + m) / (n m))`.
pub fn ks_critical_value(c_alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    c_alpha * ((n + m) / (n * m)).sqrt()
}

/// `sup_x |F_a(x) - F_b(x)|` over the merged sample points, where
/// `F(x) = #{v <= x} / n`. Ties are consumed as a block on both sides
/// before the gap is read.
pub fn ks_statistic<T: Real>(a: &[T], b: &[T]) -> f64 {
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    ks_statistic_sorted(&a, &b)
}

pub(crate) fn ks_statistic_sorted<T: Real>(a: &[T], b: &[T]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let (nf, mf) = (n as f64, m as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n || j < m {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => {
                if u <= v {
                    u
                } else {
                    v
                }
            }
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / nf - j as f64 / mf).abs();
        if gap > d {
            d = gap;
        }
    }
    d
}

/// Two-sample KS test against the asymptotic critical value `c_alpha`.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T], c_alpha: f64) -> Result<KsOutcome, SpectralError> {
    if a.len() < 5 || b.len() < 5 {
        return Err(SpectralError::TooFewSamples(a.len(), b.len()));
    }
    let statistic = ks_statistic(a, b);
    let critical = ks_critical_value(c_alpha, a.len(), b.len());
    Ok(KsOutcome {
        statistic,
        critical,
        reject: statistic > critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Double loop over every merged breakpoint.
    fn brute(a: &[f64], b: &[f64]) -> f64 {
        let mut d = 0.0f64;
        for &x in a.iter().chain(b) {
            let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
            let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    #[test]
    fn shifted_grid() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [1.5, 2.5, 3.5, 4.5, 5.5];
        let d = ks_statistic(&a, &b);
        assert_eq!(d, brute(&a, &b));
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = ks_two_sample(&a, &a, KS_C_ALPHA_05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        let lo: Vec<f64> = (0..100).map(|i| -1.0 - i as f64).collect();
        let hi: Vec<f64> = (0..100).map(|i| 1.5 + i as f64).collect();
        let r = ks_two_sample(&lo, &hi, KS_C_ALPHA_05).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.reject);
    }

    #[test]
    fn ties_across_samples() {
        let a = [1.0, 1.0, 2.0, 2.0, 3.0];
        let b = [1.0, 2.0, 2.0, 2.0, 2.0, 4.0];
        assert_eq!(ks_statistic(&a, &b), brute(&a, &b));
    }

    #[test]
    fn too_few() {
        assert_eq!(
            ks_two_sample(&[1.0; 4], &[1.0; 9], KS_C_ALPHA_05).unwrap_err(),
            SpectralError::TooFewSamples(4, 9)
        );
    }

    #[test]
    fn critical_value_at_100() {
        assert!((ks_critical_value(KS_C_ALPHA_05, 100, 100) - 0.19205).abs() < 1e-5);
    }
}
