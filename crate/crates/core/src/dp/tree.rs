//! Exhaustive optimization over a discrete scenario tree.
//!
//! With `N ≤ 3` periods and a `q`-point increment law the delayed strategy
//! class is finite dimensional: `γ_1` and `γ_2` are constants and `γ_3`
//! takes one value per outcome of the first increment. The log of the
//! expected exponential loss is a log-sum-exp of affine functions of these
//! positions, hence convex, and is minimized jointly by damped Newton with
//! the exact gradient and Hessian. No value function, grid or interpolation
//! is involved, which makes this an independent check of the recursion.

use serde::Serialize;

use super::{DelayedProblem, DpError};
use crate::{log_sum_exp, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeOracle<S> {
    pub price: S,
    pub numerator_log: S,
    pub denominator_log: S,
    /// `γ_1, γ_2`, then `γ_3` per first-period outcome when `N = 3`.
    pub positions: Vec<S>,
}

/// Scenario `s` contributes `exp(b_s + a_s · x)`.
struct Scenarios<S> {
    b: Vec<S>,
    a: Vec<Vec<S>>,
    dim: usize,
}

fn scenarios<S: Scalar>(problem: &DelayedProblem<S>, points: &[S], probs: &[S], with_payoff: bool) -> Scenarios<S> {
    let n = problem.periods();
    let q = points.len();
    let lambda = problem.lambda();
    let dim = if n == 2 { 2 } else { 2 + q };
    let count = q.pow(n as u32);
    let (mut b, mut a) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for idx in 0..count {
        let mut ks = Vec::with_capacity(n);
        let mut r = idx;
        for _ in 0..n {
            ks.push(r % q);
            r /= q;
        }
        let mut lp = S::zero();
        let mut st = problem.params().s0();
        let mut row = vec![S::zero(); dim];
        for (i, &k) in ks.iter().enumerate() {
            lp = lp + probs[k].ln();
            st = st + points[k];
            // γ_{i+1} sees increments up to i − 1
            let var = if i < 2 { i } else { 2 + ks[0] };
            row[var] = row[var] - lambda * points[k];
        }
        let pay = if with_payoff {
            lambda * problem.spec().eval(st)
        } else {
            S::zero()
        };
        b.push(lp + pay);
        a.push(row);
    }
    Scenarios { b, a, dim }
}

impl<S: Scalar> Scenarios<S> {
    fn value(&self, x: &[S]) -> S {
        log_sum_exp(self.b.iter().zip(&self.a).map(|(&b, a)| b + dot(a, x)))
    }

    fn grad_hess(&self, x: &[S]) -> (S, Vec<S>, Vec<Vec<S>>) {
        let e: Vec<S> = self.b.iter().zip(&self.a).map(|(&b, a)| b + dot(a, x)).collect();
        let v = log_sum_exp(e.iter().copied());
        let mut g = vec![S::zero(); self.dim];
        let mut h = vec![vec![S::zero(); self.dim]; self.dim];
        for (ei, a) in e.iter().zip(&self.a) {
            let w = (*ei - v).exp();
            for i in 0..self.dim {
                g[i] = g[i] + w * a[i];
                for j in 0..self.dim {
                    h[i][j] = h[i][j] + w * a[i] * a[j];
                }
            }
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                h[i][j] = h[i][j] - g[i] * g[j];
            }
        }
        (v, g, h)
    }
}

fn dot<S: Scalar>(a: &[S], x: &[S]) -> S {
    a.iter().zip(x).fold(S::zero(), |acc, (&p, &q)| acc + p * q)
}

/// Gaussian elimination with partial pivoting.
fn solve<S: Scalar>(mut m: Vec<Vec<S>>, mut rhs: Vec<S>) -> Option<Vec<S>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == S::zero() {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            let (top, bottom) = m.split_at_mut(r);
            for (a, &b) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *a = *a - f * b;
            }
            rhs[r] = rhs[r] - f * rhs[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let s = (r + 1..n).fold(rhs[r], |acc, c| acc - m[r][c] * x[c]);
        x[r] = s / m[r][r];
    }
    Some(x)
}

fn minimize<S: Scalar>(sc: &Scenarios<S>, start: S) -> (S, Vec<S>) {
    let mut x = vec![start; sc.dim];
    let mut v = sc.value(&x);
    for _ in 0..200 {
        let (_, g, mut h) = sc.grad_hess(&x);
        let gnorm = g.iter().fold(S::zero(), |m, gi| m.max(gi.abs()));
        if gnorm < S::lit(1e-13) {
            break;
        }
        let ridge = S::lit(1e-14) * (S::one() + h.iter().enumerate().fold(S::zero(), |m, (i, r)| m.max(r[i].abs())));
        for (i, r) in h.iter_mut().enumerate() {
            r[i] = r[i] + ridge;
        }
        let Some(step) = solve(h, g.iter().map(|gi| -*gi).collect()) else {
            break;
        };
        let slope = dot(&g, &step);
        let mut t = S::one();
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<S> = x.iter().zip(&step).map(|(&xi, &d)| xi + t * d).collect();
            let tv = sc.value(&trial);
            if tv <= v + S::lit(1e-4) * t * slope {
                moved = tv < v || t == S::one();
                x = trial;
                v = tv;
                break;
            }
            t = t / S::lit(2.0);
        }
        if !moved {
            break;
        }
    }
    (v, x)
}

/// Exact indifference price on the `q`-point moment-matched increment law.
pub fn indifference_price_tree_oracle<S: Scalar>(
    problem: &DelayedProblem<S>,
    q: usize,
) -> Result<TreeOracle<S>, DpError> {
    let n = problem.periods();
    if n > 3 {
        return Err(DpError::TreeTooDeep(n));
    }
    if problem.substeps() != 1 {
        return Err(DpError::Unsupported("one trade per delay period"));
    }
    let law = problem.discrete_law(q)?;
    let super::IncrementLaw::Discrete { points, probs } = &law else {
        unreachable!("moment_matched builds a discrete law")
    };
    let start = problem.merton_position();
    let (num, positions) = minimize(&scenarios(problem, points, probs, true), start);
    let (den, _) = minimize(&scenarios(problem, points, probs, false), start);
    Ok(TreeOracle {
        price: (num - den) / problem.lambda(),
        numerator_log: num,
        denominator_log: den,
        positions,
    })
}
