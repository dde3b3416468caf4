//! Concave envelope of a payoff over the whole real line, and the
//! super-replication price and buy-and-hold hedge it induces under delay.
//!
//! The envelope is the infimum of all affine majorants of `f` on ℝ. For a
//! piecewise-linear `f` with tail slopes `a_L` (left) and `a_R` (right) it is
//! the upper hull of the breakpoints, extended by rays whose slopes are
//! clipped to `[a_R, a_L]`; it is finite iff `a_R <= a_L`. Bounded payoffs have
//! `a_L = a_R = 0`, so every affine majorant is a constant and the envelope
//! collapses to `sup f`. That collapse is kept visible rather than computing
//! the hull on a truncated interval.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelParams, PayoffSpec};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("concave envelope is +inf (right tail slope {right} exceeds left tail slope {left})")]
    InfiniteEnvelope { left: f64, right: f64 },
}

/// Piecewise-linear concave function: vertices joined by segments, extended
/// to the left with `left_slope` and to the right with `right_slope`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveEnvelope<S> {
    pub finite: bool,
    pub vertices: Vec<(S, S)>,
    pub left_slope: S,
    pub right_slope: S,
}

/// Envelope evaluated at the initial price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeResult<S> {
    pub finite: bool,
    pub hull_vertices: Vec<(S, S)>,
    /// `f̂(s0)`, `+inf` when the envelope is infinite.
    pub value_at_s0: S,
    /// `∂₊f̂(s0)`.
    pub right_derivative_at_s0: S,
}

/// Super-replication price and the buy-and-hold position that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperHedge<S> {
    pub price: S,
    pub hedge_slope: S,
}

impl<S: Scalar> ConcaveEnvelope<S> {
    /// Smallest concave majorant of the piecewise-linear function through
    /// `points` (sorted by abscissa) with the given tail slopes.
    pub fn from_points(points: &[(S, S)], left_slope: S, right_slope: S) -> Self {
        assert!(!points.is_empty(), "need at least one point");
        if right_slope > left_slope {
            return Self {
                finite: false,
                vertices: Vec::new(),
                left_slope,
                right_slope,
            };
        }
        let hull = upper_hull(points);
        let slope = |i: usize| (hull[i].1 - hull[i - 1].1) / (hull[i].0 - hull[i - 1].0);
        let m = hull.len() - 1;
        let first = (0..=m).find(|&i| i == m || slope(i + 1) <= left_slope).unwrap_or(m);
        let last = (0..=m).rev().find(|&i| i == 0 || slope(i) >= right_slope).unwrap_or(0);
        Self {
            finite: true,
            vertices: hull[first..=last.max(first)].to_vec(),
            left_slope,
            right_slope,
        }
    }

    pub fn eval(&self, x: S) -> S {
        if !self.finite {
            return S::infinity();
        }
        let v = &self.vertices;
        let (x0, y0) = v[0];
        let (xn, yn) = v[v.len() - 1];
        if x <= x0 {
            return y0 + self.left_slope * (x - x0);
        }
        if x >= xn {
            return yn + self.right_slope * (x - xn);
        }
        let i = v.partition_point(|p| p.0 <= x);
        let (xa, ya) = v[i - 1];
        let (xb, yb) = v[i];
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    /// Right derivative; at a vertex this is the slope of the segment to its right.
    pub fn right_derivative(&self, x: S) -> S {
        let v = &self.vertices;
        if !self.finite || v.is_empty() {
            return S::nan();
        }
        if x < v[0].0 {
            return self.left_slope;
        }
        if x >= v[v.len() - 1].0 {
            return self.right_slope;
        }
        let i = v.partition_point(|p| p.0 <= x);
        (v[i].1 - v[i - 1].1) / (v[i].0 - v[i - 1].0)
    }
}

/// Upper hull by monotone chain; drops collinear middle points.
fn upper_hull<S: Scalar>(points: &[(S, S)]) -> Vec<(S, S)> {
    let mut hull: Vec<(S, S)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // b is kept only if it lies strictly above the chord a-p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= S::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

pub fn concave_envelope<S: Scalar>(spec: &PayoffSpec<S>) -> ConcaveEnvelope<S> {
    let points: Vec<(S, S)> = spec
        .breakpoints()
        .iter()
        .copied()
        .zip(spec.values().iter().copied())
        .collect();
    ConcaveEnvelope::from_points(&points, spec.left_tail_slope(), spec.right_tail_slope())
}

pub fn envelope_at<S: Scalar>(spec: &PayoffSpec<S>, s0: S) -> EnvelopeResult<S> {
    let env = concave_envelope(spec);
    EnvelopeResult {
        finite: env.finite,
        value_at_s0: env.eval(s0),
        right_derivative_at_s0: env.right_derivative(s0),
        hull_vertices: env.vertices,
    }
}

/// `(f̂(s0), ∂₊f̂(s0))`.
pub fn superrep_price<S: Scalar>(
    spec: &PayoffSpec<S>,
    params: &ModelParams<S>,
) -> Result<SuperHedge<S>, EnvelopeError> {
    superhedge_of(&concave_envelope(spec), params.s0())
}

fn superhedge_of<S: Scalar>(env: &ConcaveEnvelope<S>, s0: S) -> Result<SuperHedge<S>, EnvelopeError> {
    if !env.finite {
        return Err(EnvelopeError::InfiniteEnvelope {
            left: env.left_slope.as_f64(),
            right: env.right_slope.as_f64(),
        });
    }
    Ok(SuperHedge {
        price: env.eval(s0),
        hedge_slope: env.right_derivative(s0),
    })
}

/// Checks `price + slope (x - s0) >= f(x) - tol` at every breakpoint and on
/// both (constant) tails.
pub fn certifies_superhedge<S: Scalar>(spec: &PayoffSpec<S>, hedge: &SuperHedge<S>, s0: S, tol: S) -> bool {
    let line = |x: S| hedge.price + hedge.hedge_slope * (x - s0);
    let at_breakpoints = spec
        .breakpoints()
        .iter()
        .zip(spec.values())
        .all(|(&x, &y)| line(x) >= y - tol);
    // A constant tail is dominated on a half-line only by a line that does
    // not decrease towards it.
    let left_ok = hedge.hedge_slope <= spec.left_tail_slope();
    let right_ok = hedge.hedge_slope >= spec.right_tail_slope();
    at_breakpoints && left_ok && right_ok
}
