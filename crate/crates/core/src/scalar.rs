use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the numerical routines are written against.
///
/// Implemented for `f32` and `f64`. Special functions (normal CDF, erfc)
/// are evaluated in `f64` and cast back.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy cast from an `f64` literal or intermediate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sums a slice by recursive halving. The summation order depends only on
/// the slice length, so results are reproducible regardless of how the
/// values were produced.
pub fn pairwise_sum<S: Scalar>(values: &[S]) -> S {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().fold(S::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `log(sum(exp(v)))` without overflow. Returns `-inf` for an empty input.
pub fn log_sum_exp<S: Scalar>(values: impl IntoIterator<Item = S> + Clone) -> S {
    let max = values
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, v| if v > m { v } else { m });
    if !max.is_finite() {
        return max;
    }
    let total = values.into_iter().fold(S::zero(), |acc, v| acc + (v - max).exp());
    max + total.ln()
}

/// Standard normal CDF.
pub fn norm_cdf<S: Scalar>(x: S) -> S {
    let x = x.as_f64();
    S::lit(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
pub fn norm_sf<S: Scalar>(x: S) -> S {
    let x = x.as_f64();
    S::lit(0.5 * libm::erfc(x / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn norm_pdf<S: Scalar>(x: S) -> S {
    let x = x.as_f64();
    S::lit((-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

/// `Φ(b) - Φ(a)` for `a <= b`, evaluated on whichever tail keeps precision.
pub fn norm_interval<S: Scalar>(a: S, b: S) -> S {
    if a >= S::zero() {
        norm_sf(a) - norm_sf(b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    #[test]
    fn log_sum_exp_handles_large_arguments() {
        let v = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>([]), f64::NEG_INFINITY);
    }

    #[test]
    fn normal_interval_tails() {
        assert!((norm_interval(-1.0_f64, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-14);
        let far = norm_interval(10.0_f64, 11.0);
        assert!(far > 0.0 && far < 1e-22);
    }
}
