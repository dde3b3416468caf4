use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PayoffError {
    #[error("payoff needs at least one breakpoint")]
    Empty,
    #[error("{breakpoints} breakpoints but {values} values")]
    LengthMismatch { breakpoints: usize, values: usize },
    #[error("breakpoints must be finite and strictly increasing (index {index})")]
    NonMonotoneBreakpoints { index: usize },
    #[error("payoff value {value} at index {index} is negative or not finite")]
    NegativeValue { index: usize, value: f64 },
    #[error("{side} tail value {tail} does not match endpoint value {endpoint}")]
    DiscontinuousTail {
        side: &'static str,
        tail: f64,
        endpoint: f64,
    },
}

/// Unvalidated payoff data as it appears on the wire. Tail values default to
/// the endpoint values when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPayoff<S> {
    pub breakpoints: Vec<S>,
    pub values: Vec<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_tail_value: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_tail_value: Option<S>,
}

/// One affine piece `f(x) = intercept + slope * x` on `[lo, hi]`; the tails
/// have an infinite endpoint and zero slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<S> {
    pub lo: S,
    pub hi: S,
    pub intercept: S,
    pub slope: S,
}

impl<S: Scalar> Segment<S> {
    #[inline]
    pub fn eval(&self, x: S) -> S {
        self.intercept + self.slope * x
    }
}

/// A continuous, nonnegative, bounded, piecewise-linear payoff: linear
/// interpolation between breakpoints and constant outside them.
///
/// Bounded payoffs satisfy `0 <= f(x) <= C (1 + |x|^p)` with `p = 0` and
/// `C = sup f`, see [`PayoffSpec::growth_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoff<S>", into = "RawPayoff<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct PayoffSpec<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
    slopes: Vec<S>,
    sup: S,
}

impl<S: Scalar> PayoffSpec<S> {
    pub fn validate(raw: RawPayoff<S>) -> Result<Self, PayoffError> {
        let RawPayoff {
            breakpoints,
            values,
            left_tail_value,
            right_tail_value,
        } = raw;
        if breakpoints.is_empty() {
            return Err(PayoffError::Empty);
        }
        if breakpoints.len() != values.len() {
            return Err(PayoffError::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values.len(),
            });
        }
        for (i, x) in breakpoints.iter().enumerate() {
            if !x.is_finite() || (i > 0 && *x <= breakpoints[i - 1]) {
                return Err(PayoffError::NonMonotoneBreakpoints { index: i });
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < S::zero() {
                return Err(PayoffError::NegativeValue {
                    index: i,
                    value: v.as_f64(),
                });
            }
        }
        let first = values[0];
        let last = values[values.len() - 1];
        for (side, tail, endpoint) in [("left", left_tail_value, first), ("right", right_tail_value, last)] {
            if let Some(t) = tail {
                if t != endpoint {
                    return Err(PayoffError::DiscontinuousTail {
                        side,
                        tail: t.as_f64(),
                        endpoint: endpoint.as_f64(),
                    });
                }
            }
        }
        let slopes = breakpoints
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let sup = values.iter().fold(S::zero(), |m, &v| m.max(v));
        Ok(Self {
            breakpoints,
            values,
            slopes,
            sup,
        })
    }

    pub fn new(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self, PayoffError> {
        Self::validate(RawPayoff {
            breakpoints,
            values,
            left_tail_value: None,
            right_tail_value: None,
        })
    }

    /// `f ≡ c`.
    pub fn constant(c: S) -> Result<Self, PayoffError> {
        Self::new(vec![S::zero()], vec![c])
    }

    /// `min(max(x - lo, 0), hi - lo)`: a call spread capped at `hi - lo`.
    pub fn capped_call(lo: S, hi: S) -> Result<Self, PayoffError> {
        Self::new(vec![lo, hi], vec![S::zero(), hi - lo])
    }

    /// Tent of height `height` centred at `center` with half-width `half_width`.
    pub fn butterfly(center: S, half_width: S, height: S) -> Result<Self, PayoffError> {
        Self::new(
            vec![center - half_width, center, center + half_width],
            vec![S::zero(), height, S::zero()],
        )
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }
    pub fn values(&self) -> &[S] {
        &self.values
    }
    /// Slopes of the interior segments, one per consecutive breakpoint pair.
    pub fn slopes(&self) -> &[S] {
        &self.slopes
    }
    pub fn left_tail_value(&self) -> S {
        self.values[0]
    }
    pub fn right_tail_value(&self) -> S {
        self.values[self.values.len() - 1]
    }
    /// Slope of `f` on `(-inf, x_0]`; zero for the bounded class.
    pub fn left_tail_slope(&self) -> S {
        S::zero()
    }
    pub fn right_tail_slope(&self) -> S {
        S::zero()
    }

    /// `sup f`.
    pub fn sup(&self) -> S {
        self.sup
    }

    /// Largest absolute slope; zero for constant payoffs.
    pub fn lipschitz(&self) -> S {
        self.slopes.iter().fold(S::zero(), |m, s| m.max(s.abs()))
    }

    /// Constants `(C, p)` with `0 <= f(x) <= C (1 + |x|^p)`.
    pub fn growth_bound(&self) -> (S, S) {
        (self.sup, S::zero())
    }

    pub fn is_constant(&self) -> bool {
        self.slopes.iter().all(|s| *s == S::zero())
    }

    pub fn eval(&self, x: S) -> S {
        let xs = &self.breakpoints;
        let n = xs.len();
        if x <= xs[0] {
            return self.values[0];
        }
        if x >= xs[n - 1] {
            return self.values[n - 1];
        }
        // first index with xs[i] > x, so x lies in [xs[i-1], xs[i])
        let i = xs.partition_point(|b| *b <= x);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        let v = self.values[i - 1] + t * (self.values[i] - self.values[i - 1]);
        v.max(S::zero())
    }

    /// All affine pieces from the left tail to the right tail.
    pub fn segments(&self) -> Vec<Segment<S>> {
        let xs = &self.breakpoints;
        let ys = &self.values;
        let mut out = Vec::with_capacity(xs.len() + 1);
        out.push(Segment {
            lo: S::neg_infinity(),
            hi: xs[0],
            intercept: ys[0],
            slope: S::zero(),
        });
        for (i, &slope) in self.slopes.iter().enumerate() {
            out.push(Segment {
                lo: xs[i],
                hi: xs[i + 1],
                intercept: ys[i] - slope * xs[i],
                slope,
            });
        }
        out.push(Segment {
            lo: xs[xs.len() - 1],
            hi: S::infinity(),
            intercept: ys[ys.len() - 1],
            slope: S::zero(),
        });
        out
    }

    /// Payoff shifted and scaled by `a + b f`; used for the cash-payoff identities.
    pub fn affine_image(&self, a: S, b: S) -> Result<Self, PayoffError> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|&v| a + b * v).collect(),
        )
    }
}

impl<S: Scalar> TryFrom<RawPayoff<S>> for PayoffSpec<S> {
    type Error = PayoffError;
    fn try_from(raw: RawPayoff<S>) -> Result<Self, Self::Error> {
        Self::validate(raw)
    }
}

impl<S: Scalar> From<PayoffSpec<S>> for RawPayoff<S> {
    fn from(p: PayoffSpec<S>) -> Self {
        RawPayoff {
            breakpoints: p.breakpoints,
            values: p.values,
            left_tail_value: None,
            right_tail_value: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn capped() -> PayoffSpec<f64> {
        PayoffSpec::capped_call(0.0, 1.0).unwrap()
    }

    #[test]
    fn interpolates_and_extends_by_tails() {
        let c = capped();
        assert_eq!(c.eval(0.5), 0.5);
        assert_eq!(c.eval(-3.0), 0.0);
        assert_eq!(c.eval(7.0), 1.0);
        let fly = PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap();
        assert_eq!(fly.eval(0.25), 0.75);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(capped().sup(), 1.0);
        assert!(matches!(
            PayoffSpec::new(vec![-1.0, 0.0, 1.0], vec![0.0, -0.1, 0.0]),
            Err(PayoffError::NegativeValue { index: 1, .. })
        ));
        let raw = RawPayoff {
            breakpoints: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
            left_tail_value: Some(0.5),
            right_tail_value: None,
        };
        assert!(matches!(
            PayoffSpec::validate(raw),
            Err(PayoffError::DiscontinuousTail { side: "left", .. })
        ));
        assert!(matches!(
            PayoffSpec::new(vec![0.0, 0.0], vec![0.0, 1.0]),
            Err(PayoffError::NonMonotoneBreakpoints { index: 1 })
        ));
        assert!(matches!(
            PayoffSpec::<f64>::new(vec![], vec![]),
            Err(PayoffError::Empty)
        ));
        assert!(matches!(
            PayoffSpec::new(vec![0.0, 1.0], vec![0.0]),
            Err(PayoffError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_with_implied_tails() {
        let p: PayoffSpec<f64> = serde_json::from_str(r#"{"breakpoints": [0, 1], "values": [0.5, 1]}"#).unwrap();
        assert_eq!(p.left_tail_value(), 0.5);
        assert_eq!(p.right_tail_value(), 1.0);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"breakpoints":[0.0,1.0],"values":[0.5,1.0]}"#);
        let bad = serde_json::from_str::<PayoffSpec<f64>>(r#"{"breakpoints": [1, 0], "values": [0, 1]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn growth_constants_and_lipschitz() {
        let fly = PayoffSpec::butterfly(0.0, 0.5, 2.0).unwrap();
        assert_eq!(fly.growth_bound(), (2.0, 0.0));
        assert_eq!(fly.lipschitz(), 4.0);
        assert!(PayoffSpec::constant(3.0).unwrap().is_constant());
    }

    #[test]
    fn works_in_single_precision() {
        let c = PayoffSpec::<f32>::capped_call(0.0, 1.0).unwrap();
        assert_eq!(c.eval(0.25), 0.25);
    }

    fn random_spec() -> impl Strategy<Value = PayoffSpec<f64>> {
        (1usize..8)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(0.01f64..2.0, n),
                    prop::collection::vec(0.0f64..5.0, n),
                    -3.0f64..3.0,
                )
            })
            .prop_map(|(gaps, values, start)| {
                let mut x = start;
                let bps = gaps
                    .iter()
                    .map(|g| {
                        x += g;
                        x
                    })
                    .collect();
                PayoffSpec::new(bps, values).unwrap()
            })
    }

    proptest! {
        #[test]
        fn eval_matches_two_point_line(spec in random_spec(), u in 0.0f64..1.0, seg in 0usize..8) {
            let xs = spec.breakpoints();
            let ys = spec.values();
            if xs.len() >= 2 {
                let i = seg % (xs.len() - 1);
                let x = xs[i] + u * (xs[i + 1] - xs[i]);
                let line = ys[i] + (x - xs[i]) * (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                prop_assert!((spec.eval(x) - line).abs() <= 1e-12 * (1.0 + line.abs()));
            }
            for s in spec.segments() {
                let probe = if s.lo.is_finite() && s.hi.is_finite() { 0.5 * (s.lo + s.hi) }
                    else if s.lo.is_finite() { s.lo + 1.0 } else { s.hi - 1.0 };
                prop_assert!((s.eval(probe) - spec.eval(probe)).abs() <= 1e-9);
            }
        }

        #[test]
        fn eval_never_exceeds_cached_sup(spec in random_spec(), xs in prop::collection::vec(-10.0f64..10.0, 200)) {
            for x in xs {
                let v = spec.eval(x);
                prop_assert!(v >= 0.0 && v <= spec.sup());
            }
        }
    }
}
