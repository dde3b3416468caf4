//! Limit value against the continuous normal law.
//!
//! For a fixed multiplier each segment of `f` contributes a candidate
//! pointwise value that is piecewise quadratic in `z` (clamped at either end
//! of the segment or at the interior vertex). The pointwise maximum is the
//! upper envelope of these quadratics, whose breakpoints are found exactly,
//! and every integral against `N(0, T)` reduces to partial Gaussian moments.
//! The constraint map is then continuous and is solved by bisection.

use serde::Serialize;

use super::LimitProblem;
use crate::{norm_cdf, norm_pdf, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactLimit<S> {
    pub multiplier: S,
    pub value: S,
    pub constraint_residual: S,
}

/// Candidate on `[zl, zh]`: value `a0 + a1 z + a2 z²` and maximizer `b0 + b1 z`.
#[derive(Debug, Clone, Copy)]
struct Piece<S> {
    zl: S,
    zh: S,
    a: [S; 3],
    b: [S; 2],
}

impl<S: Scalar> Piece<S> {
    fn value(&self, z: S) -> S {
        self.a[0] + z * (self.a[1] + z * self.a[2])
    }
}

fn candidates<S: Scalar>(problem: &LimitProblem<S>, lambda: S) -> Vec<Vec<Piece<S>>> {
    let p = problem.params();
    let (s0, sigma, k) = (p.s0(), p.sigma(), problem.penalty());
    let ninf = S::neg_infinity();
    let pinf = S::infinity();
    problem
        .spec()
        .segments()
        .into_iter()
        .map(|seg| {
            let (alpha, beta) = (seg.intercept, seg.slope);
            let d = (beta - lambda) / (S::lit(2.0) * k);
            let (c_lo, c_hi) = (seg.lo - s0, seg.hi - s0);
            let clamp = |c: S, zl: S, zh: S| Piece {
                zl,
                zh,
                a: [
                    alpha + beta * (s0 + c) - lambda * c - k * c * c,
                    S::lit(2.0) * k * c * sigma,
                    -k * sigma * sigma,
                ],
                b: [c, S::zero()],
            };
            let z_lo = if c_lo.is_finite() { (c_lo - d) / sigma } else { ninf };
            let z_hi = if c_hi.is_finite() { (c_hi - d) / sigma } else { pinf };
            let mut pieces = Vec::with_capacity(3);
            if c_lo.is_finite() {
                pieces.push(clamp(c_lo, ninf, z_lo));
            }
            pieces.push(Piece {
                zl: z_lo,
                zh: z_hi,
                a: [
                    alpha + beta * s0 + (beta - lambda) * d - k * d * d,
                    (beta - lambda) * sigma,
                    S::zero(),
                ],
                b: [d, sigma],
            });
            if c_hi.is_finite() {
                pieces.push(clamp(c_hi, z_hi, pinf));
            }
            pieces
        })
        .collect()
}

/// Real roots of `c2 z² + c1 z + c0` strictly inside `(lo, hi)`.
fn roots_in<S: Scalar>(c: [S; 3], lo: S, hi: S, out: &mut Vec<S>) {
    let [c0, c1, c2] = c;
    let scale = c0.abs() + c1.abs();
    let mut push = |r: S| {
        if r > lo && r < hi && r.is_finite() {
            out.push(r);
        }
    };
    if c2.abs() <= S::lit(1e-14) * scale || c2 == S::zero() {
        if c1 != S::zero() {
            push(-c0 / c1);
        }
        return;
    }
    let disc = c1 * c1 - S::lit(4.0) * c2 * c0;
    if disc < S::zero() {
        return;
    }
    let q = -(c1 + c1.signum() * disc.sqrt()) / S::lit(2.0);
    push(q / c2);
    if q != S::zero() {
        push(c0 / q);
    }
}

fn probe<S: Scalar>(lo: S, hi: S) -> S {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo + hi) / S::lit(2.0),
        (false, true) => hi - S::one(),
        (true, false) => lo + S::one(),
        (false, false) => S::zero(),
    }
}

/// Partial moments `∫_a^b u^j φ(u) du`, `j = 0, 1, 2`, for the standard normal.
fn moments<S: Scalar>(a: S, b: S) -> [S; 3] {
    let tail = |x: S| if x.is_finite() { x * norm_pdf(x) } else { S::zero() };
    let m0 = norm_cdf(b) - norm_cdf(a);
    let m1 = norm_pdf(a) - norm_pdf(b);
    [m0, m1, m0 + tail(a) - tail(b)]
}

/// Penalized dual value `D(λ)` and constraint `G(λ) = E[ζ*]` under `N(0, T)`.
pub fn dual_and_constraint<S: Scalar>(problem: &LimitProblem<S>, lambda: S) -> (S, S) {
    let cands = candidates(problem, lambda);
    let mut cuts: Vec<S> = cands
        .iter()
        .flatten()
        .flat_map(|p| [p.zl, p.zh])
        .filter(|z| z.is_finite())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(S::neg_infinity());
    edges.extend(cuts);
    edges.push(S::infinity());

    let root_t = problem.params().horizon().sqrt();
    let (mut dual, mut constraint) = (S::zero(), S::zero());
    let mut active = Vec::with_capacity(cands.len());
    let mut sub = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = probe(lo, hi);
        active.clear();
        for pieces in &cands {
            let piece = pieces.iter().find(|p| p.zl <= mid && mid <= p.zh).unwrap_or(&pieces[0]);
            active.push(*piece);
        }
        sub.clear();
        sub.push(lo);
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let (p, q) = (active[i].a, active[j].a);
                roots_in([p[0] - q[0], p[1] - q[1], p[2] - q[2]], lo, hi, &mut sub);
            }
        }
        sub.push(hi);
        sub.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for v in sub.windows(2) {
            let (u, x) = (v[0], v[1]);
            if u >= x {
                continue;
            }
            let m = probe(u, x);
            let best = active
                .iter()
                .fold(None::<&Piece<S>>, |acc, p| match acc {
                    Some(b) if b.value(m) >= p.value(m) => Some(b),
                    _ => Some(p),
                })
                .unwrap();
            let [m0, m1, m2] = moments(u / root_t, x / root_t);
            dual = dual + best.a[0] * m0 + best.a[1] * root_t * m1 + best.a[2] * root_t * root_t * m2;
            constraint = constraint + best.b[0] * m0 + best.b[1] * root_t * m1;
        }
    }
    (dual, constraint)
}

/// Limit value with `μ = N(0, T)` integrated in closed form.
pub fn limit_value_exact<S: Scalar>(problem: &LimitProblem<S>) -> ExactLimit<S> {
    let (bmin, bmax) = problem.slope_range();
    let (mut lo, mut hi) = (bmin - S::one(), bmax + S::one());
    let g = |l: S| dual_and_constraint(problem, l).1;
    for _ in 0..200 {
        let mid = (lo + hi) / S::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (lo + hi) / S::lit(2.0);
    let (dual, constraint) = dual_and_constraint(problem, lambda);
    ExactLimit {
        multiplier: lambda,
        value: dual + lambda * constraint,
        constraint_residual: constraint.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::limit_value;
    use crate::model::{ModelParams, PayoffSpec};

    fn problem(spec: PayoffSpec<f64>, s0: f64, a: f64, nodes: usize) -> LimitProblem<f64> {
        LimitProblem::new(a, ModelParams::standard().with_s0(s0), spec, nodes).unwrap()
    }

    #[test]
    fn moments_of_full_line() {
        let [m0, m1, m2] = moments(f64::NEG_INFINITY, f64::INFINITY);
        assert!((m0 - 1.0).abs() < 1e-15 && m1.abs() < 1e-15 && (m2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_payoff_dual_is_closed_form() {
        // f = 0: ζ* = σz − Aσ²λ and D(λ) = Aσ²λ²/2.
        let p = problem(PayoffSpec::constant(0.0).unwrap(), 0.0, 2.0, 8);
        for lambda in [-0.7, 0.0, 0.3] {
            let (d, g) = dual_and_constraint(&p, lambda);
            assert!((d - lambda * lambda).abs() < 1e-13, "{d}");
            assert!((g + 2.0 * lambda).abs() < 1e-13, "{g}");
        }
    }

    #[test]
    fn agrees_with_dense_quadrature() {
        let cap = PayoffSpec::capped_call(0.0, 1.0).unwrap();
        let fly = PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap();
        for (spec, s0) in [(cap, 0.5), (fly, 0.0)] {
            for a in [0.5, 2.0] {
                let exact = limit_value_exact(&problem(spec.clone(), s0, a, 8));
                let quad = limit_value(&problem(spec.clone(), s0, a, 200)).unwrap();
                assert!(exact.constraint_residual < 1e-10);
                assert!(
                    (exact.value - quad.value).abs() < 5e-3,
                    "{} vs {}",
                    exact.value,
                    quad.value
                );
            }
        }
    }

    #[test]
    fn constraint_is_continuous_and_nonincreasing() {
        let p = problem(PayoffSpec::capped_call(0.0, 1.0).unwrap(), 0.5, 10.0, 8);
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let l = -0.5 + 2.0 * i as f64 / 400.0;
            let g = dual_and_constraint(&p, l).1;
            assert!(g <= prev + 1e-12);
            assert!(prev == f64::INFINITY || prev - g < 0.2);
            prev = g;
        }
    }
}
