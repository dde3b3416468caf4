//! Gaussian backward induction on one-dimensional profiles.
//!
//! Write `M(c) = E[exp(−λcZ)]` and `m_c = μΔ − λcσ²Δ`. For Gaussian `Z`,
//! `E[exp(−λcZ) h(Z)] = M(c) E[h(Z + m_c − μΔ)]`, so every value function
//! of the delayed recursion has the form `V_j(s, g) = M(g) exp(K_j(s + m_g))`
//! and the recursion acts on `K` through two operators:
//!
//! * smoothing `S F(u) = log E[exp F(u + σ√Δ ξ)]`, `ξ ~ N(0, 1)`;
//! * the min-transform `T F(y) = min_c { log M(c) + F(y + m_c) }`.
//!
//! Here `Δ` is the trading period. With `k` trades per delay period, the
//! positions committed but not yet revealed still enter only through the sum
//! of their shifts, so the state stays one-dimensional. For `n = N·k` trades
//! the numerator is `T^k (T S)^{n−k−1} T S^{k+1} (λf)` at `s0`, with
//! `S^{k+1}(λf)` in closed form. Without delay it is `(T S)^n (λf)`.

use rayon::prelude::*;

use super::interp::Pchip;
use super::{Delay, DelayedProblem, DpConfig, DpDiagnostics, DpError};
use crate::model::{gauss_quadrature, PayoffSpec, Segment};
use crate::optimize::scan_then_golden;
use crate::{log_sum_exp, norm_interval, Scalar};

/// `log E[exp(λ f(y + √v ξ))]` in closed form, integrating each affine piece
/// of `f` against the tilted normal law.
pub fn log_exp_payoff<S: Scalar>(segments: &[Segment<S>], lambda: S, y: S, variance: S) -> S {
    let sd = variance.sqrt();
    let half = S::lit(0.5);
    log_sum_exp(segments.iter().map(|seg| {
        let b = lambda * seg.slope;
        let mean = y + b * variance;
        let p = norm_interval((seg.lo - mean) / sd, (seg.hi - mean) / sd);
        lambda * seg.intercept + b * y + half * b * b * variance + p.ln()
    }))
}

/// A log-profile: closed-form smoothed payoff or an interpolated table.
enum Profile<'a, S> {
    Exact {
        segments: &'a [Segment<S>],
        lambda: S,
        variance: S,
    },
    Table(Pchip<S>),
}

impl<S: Scalar> Profile<'_, S> {
    fn eval(&self, y: S) -> S {
        match self {
            Profile::Exact {
                segments,
                lambda,
                variance,
            } => log_exp_payoff(segments, *lambda, y, *variance),
            Profile::Table(t) => t.eval(y),
        }
    }
}

struct Ctx<'a, S> {
    lambda: S,
    mu_d: S,
    var_d: S,
    y: Vec<S>,
    c: Vec<S>,
    std_nodes: Vec<S>,
    log_w: Vec<S>,
    weights: &'a [S],
    s0: S,
    ref_var: S,
}

impl<S: Scalar> Ctx<'_, S> {
    fn log_m(&self, c: S) -> S {
        let t = self.lambda * c;
        -t * self.mu_d + t * t * self.var_d / S::lit(2.0)
    }
    fn shift(&self, c: S) -> S {
        self.mu_d - self.lambda * c * self.var_d
    }

    /// `T F(y)` and its minimizer: scan the position grid, then golden
    /// section on the cell pair around the best node.
    fn min_transform(&self, f: &Profile<'_, S>, y: S) -> (S, S) {
        nested_min(&self.c, |c: S| self.log_m(c) + f.eval(y + self.shift(c)))
    }

    fn tabulate_min(&self, f: &Profile<'_, S>, stage: usize) -> Result<Pchip<S>, DpError> {
        let vals: Vec<S> = self.y.par_iter().map(|&y| self.min_transform(f, y).0).collect();
        finite(&vals, stage)?;
        Ok(Pchip::new(self.y.clone(), vals))
    }

    /// `S F` on the price grid, with the reference-weighted mass of
    /// quadrature points that fell off the grid.
    fn smooth(&self, f: &Pchip<S>, stage: usize) -> Result<(Pchip<S>, S), DpError> {
        let sd = self.var_d.sqrt();
        let vals: Vec<S> = self
            .y
            .par_iter()
            .map(|&u| {
                log_sum_exp(
                    self.std_nodes
                        .iter()
                        .zip(&self.log_w)
                        .map(|(&z, &lw)| lw + f.eval(u + sd * z)),
                )
            })
            .collect();
        finite(&vals, stage)?;
        let (lo, hi) = (self.y[0], self.y[self.y.len() - 1]);
        let (mut out, mut total) = (S::zero(), S::zero());
        for &u in &self.y {
            let d = u - self.s0;
            let rho = (-d * d / (S::lit(2.0) * self.ref_var)).exp();
            let off: S = self
                .std_nodes
                .iter()
                .zip(self.weights)
                .filter(|(&z, _)| u + sd * z < lo || u + sd * z > hi)
                .map(|(_, &w)| w)
                .sum();
            out = out + rho * off;
            total = total + rho;
        }
        let mass = out / total;
        if mass >= S::lit(1e-3) {
            return Err(DpError::Extrapolation {
                stage,
                mass: mass.as_f64(),
            });
        }
        Ok((Pchip::new(self.y.clone(), vals), mass))
    }
}

fn finite<S: Scalar>(vals: &[S], stage: usize) -> Result<(), DpError> {
    match vals.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(DpError::OverflowGuard {
            stage,
            node,
            value: vals[node].as_f64(),
        }),
        None => Ok(()),
    }
}

/// Log numerator `log inf_γ E[exp(−λ(Σ γ_i ΔS_i − f(S_T)))]` under Gaussian increments.
pub fn numerator_log<S: Scalar>(
    problem: &DelayedProblem<S>,
    config: &DpConfig<S>,
) -> Result<(S, DpDiagnostics<S>), DpError> {
    let params = problem.params();
    let d = problem.step();
    let var_d = params.sigma() * params.sigma() * d;
    let rule = gauss_quadrature(config.quad_nodes, S::zero(), S::one())?;
    let ctx = Ctx {
        lambda: problem.lambda(),
        mu_d: params.mu() * d,
        var_d,
        y: config.s_grid(problem),
        c: config.g_grid(problem),
        std_nodes: rule.nodes().to_vec(),
        log_w: rule.weights().iter().map(|w| w.ln()).collect(),
        weights: rule.weights(),
        s0: params.s0(),
        ref_var: params.sigma() * params.sigma() * params.horizon(),
    };
    let segments = problem.spec().segments();
    let exact = |variance: S| Profile::Exact {
        segments: &segments,
        lambda: problem.lambda(),
        variance,
    };
    let n = problem.trades();
    let k = problem.substeps();
    let mut clamped = S::zero();

    let (num, g1, g2) = match config.delay {
        Delay::OnePeriod => {
            // k + 1 increments are unobserved when the last position is set
            let mut f = exact(S::from_usize_lossy(k + 1) * var_d);
            for stage in (k + 2..=n).rev() {
                let w = ctx.tabulate_min(&f, stage)?;
                let (l, mass) = ctx.smooth(&w, stage)?;
                clamped = clamped.max(mass);
                f = Profile::Table(l);
            }
            // The first k positions see only s0. They enter through the sum of
            // their shifts and convex costs, so they are equal; γ_{k+1} is
            // found by a nested search.
            let kk = S::from_usize_lossy(k);
            let inner = |y: S| ctx.min_transform(&f, y);
            let phi = |c: S| kk * ctx.log_m(c) + inner(params.s0() + kk * ctx.shift(c)).0;
            let (num, g1) = nested_min(&ctx.c, phi);
            let g2 = inner(params.s0() + kk * ctx.shift(g1)).1;
            (num, g1, g2)
        }
        Delay::None => {
            let mut f = exact(var_d);
            for stage in (2..=n).rev() {
                let w = ctx.tabulate_min(&f, stage)?;
                let (l, mass) = ctx.smooth(&w, stage)?;
                clamped = clamped.max(mass);
                f = Profile::Table(l);
            }
            let (num, g1) = ctx.min_transform(&f, params.s0());
            (num, g1, S::nan())
        }
    };
    if !num.is_finite() {
        return Err(DpError::OverflowGuard {
            stage: 1,
            node: 0,
            value: num.as_f64(),
        });
    }
    Ok((
        num,
        DpDiagnostics {
            engine: "gaussian-reduced",
            delay: config.delay,
            s_range: (ctx.y[0], ctx.y[ctx.y.len() - 1]),
            g_range: (ctx.c[0], ctx.c[ctx.c.len() - 1]),
            s_nodes: ctx.y.len(),
            g_nodes: ctx.c.len(),
            quadrature_order: config.quad_nodes,
            clamped_mass: clamped,
            initial_positions: (g1, g2),
        },
    ))
}

/// Scan plus golden-section minimum over a grid; returns `(value, argmin)`.
pub(crate) fn nested_min<S: Scalar>(grid: &[S], phi: impl Fn(S) -> S) -> (S, S) {
    let tol = (grid[grid.len() - 1] - grid[0]) * S::lit(1e-11);
    let m = scan_then_golden(phi, grid, tol);
    (m.value, m.x)
}

/// Closed-form terminal profile `K_{N+1}(y) = log E[exp(λ f(y + σ√Δ ξ))]`, `variance = σ²Δ`.
pub fn terminal_profile<S: Scalar>(spec: &PayoffSpec<S>, lambda: S, y: S, variance: S) -> S {
    log_exp_payoff(&spec.segments(), lambda, y, variance)
}
