//! Brute-force reference for small quadrature rules.
//!
//! Sweeps the multiplier over a fine uniform grid, maximizes each pointwise
//! problem by dense grid search plus golden refinement without using the
//! piecewise structure of `f`, and keeps the best feasible profile: a pure
//! profile whose constraint is within grid tolerance, or the feasible mixture
//! of two consecutive profiles whose constraints straddle zero.

use super::{LimitError, LimitProblem};
use crate::optimize::golden_section;
use crate::Scalar;

/// Largest node count the sweep accepts.
pub const ORACLE_MAX_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceLimit<S> {
    pub value: S,
    pub multiplier: S,
}

/// `multipliers` grid points over the slope range of `f`, `resolution` grid
/// points per pointwise maximization.
pub fn limit_value_bruteforce<S: Scalar>(
    problem: &LimitProblem<S>,
    multipliers: usize,
    resolution: usize,
) -> Result<BruteForceLimit<S>, LimitError> {
    let quad = problem.quadrature();
    if quad.len() > ORACLE_MAX_NODES {
        return Err(LimitError::OracleTooLarge {
            max: ORACLE_MAX_NODES,
            got: quad.len(),
        });
    }
    let p = problem.params();
    let sigma = p.sigma();
    let (bmin, bmax) = problem.slope_range();
    let pad = S::lit(0.05) * (S::one() + bmax - bmin);
    let (lmin, lmax) = (bmin - pad, bmax + pad);
    let a_s2 = problem.a() * sigma * sigma;
    let xs = problem.spec().breakpoints();
    let span = xs[xs.len() - 1] - xs[0] + p.s0().abs() + xs[0].abs().max(xs[xs.len() - 1].abs());
    let half = a_s2 * (S::lit(2.0) * (lmax - lmin) + bmax - bmin) + span + S::one();

    let n = quad.len();
    let mut best: Option<BruteForceLimit<S>> = None;
    let mut prev: Option<(S, S, S)> = None; // (λ, G, J)
    let grid_tol = S::lit(1e-9);
    for j in 0..multipliers {
        let lambda = lmin + (lmax - lmin) * S::from_usize_lossy(j) / S::from_usize_lossy(multipliers - 1);
        let mut g = S::zero();
        let mut obj = S::zero();
        for i in 0..n {
            let z = quad.nodes()[i];
            let w = quad.weights()[i];
            let centre = sigma * z;
            let h = |x: S| problem.integrand(z, x) - lambda * x;
            let step = S::lit(2.0) * half / S::from_usize_lossy(resolution - 1);
            let (mut bx, mut bv) = (centre - half, S::neg_infinity());
            for m in 0..resolution {
                let x = centre - half + step * S::from_usize_lossy(m);
                let v = h(x);
                if v > bv {
                    bv = v;
                    bx = x;
                }
            }
            let refined = golden_section(|x| -h(x), bx - step, bx + step, S::lit(1e-13));
            let x = if -refined.value >= bv { refined.x } else { bx };
            g = g + w * x;
            obj = obj + w * problem.integrand(z, x);
        }
        let mut consider = |value: S| {
            if best.is_none_or(|b| value > b.value) {
                best = Some(BruteForceLimit {
                    value,
                    multiplier: lambda,
                });
            }
        };
        if g.abs() <= grid_tol {
            consider(obj);
        }
        if let Some((_, g0, j0)) = prev {
            if g0 > S::zero() && g < S::zero() {
                let theta = -g / (g0 - g);
                consider(theta * j0 + (S::one() - theta) * obj);
            }
        }
        prev = Some((lambda, g, obj));
    }
    best.ok_or(LimitError::OracleInfeasible)
}
