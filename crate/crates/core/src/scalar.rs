//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar accepted by the signal, spectral and LSTM code.
///
/// Implemented for `f32` and `f64`. Literals enter through [`Real::lit`] so
/// generic code can stay free of `from_f64(..).unwrap()` noise.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Name written into model files.
    const NAME: &'static str;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";
}

impl Real for f64 {
    const NAME: &'static str = "f64";
}

/// Percentile by sorted-order linear interpolation: rank `q * (n - 1)`,
/// interpolated between the neighbouring order statistics.
///
/// `sorted` must be ascending and non-empty; `q` is a fraction in `[0, 1]`.
pub fn percentile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::lit(rank - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Sorts a copy of finite values ascending.
pub(crate) fn sorted_copy<T: Real>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates_between_ranks() {
        let v: Vec<f64> = (0..=1000).map(|x| x as f64).collect();
        assert_eq!(percentile_sorted(&v, 0.025), 25.0);
        assert_eq!(percentile_sorted(&v, 0.975), 975.0);
        let w = [1.0f64, 2.0, 4.0];
        assert_eq!(percentile_sorted(&w, 0.75), 3.0);
    }

    #[test]
    fn percentile_single_value() {
        assert_eq!(percentile_sorted(&[7.5f32], 0.3), 7.5);
    }
}
