//! Two-dimensional value tables `V_j(s, g)` for arbitrary increment laws.

use rayon::prelude::*;

use super::interp::{cubic_uniform, pchip_local};
use super::law::IncrementLaw;
use super::reduced::{log_exp_payoff, nested_min};
use super::{Delay, DelayedProblem, DpConfig, DpDiagnostics, DpError};
use crate::model::Segment;
use crate::{log_sum_exp, Scalar};

/// Anything that can report `log V_j(s, g)`.
pub trait StageValue<S>: Sync {
    fn stage(&self) -> usize;
    fn log_value(&self, s: S, g: S) -> S;
}

/// `V_{N+1}(s, g) = E[exp(−λ(gZ − f(s + Z)))]` in closed form (Gaussian) or
/// by direct summation (discrete).
pub struct Terminal<'a, S> {
    problem: &'a DelayedProblem<S>,
    law: &'a IncrementLaw<S>,
    segments: Vec<Segment<S>>,
}

impl<'a, S: Scalar> Terminal<'a, S> {
    pub fn new(problem: &'a DelayedProblem<S>, law: &'a IncrementLaw<S>) -> Self {
        Self {
            problem,
            law,
            segments: problem.spec().segments(),
        }
    }
}

impl<S: Scalar> StageValue<S> for Terminal<'_, S> {
    fn stage(&self) -> usize {
        self.problem.periods() + 1
    }

    fn log_value(&self, s: S, g: S) -> S {
        let lambda = self.problem.lambda();
        match self.law {
            IncrementLaw::Gaussian { rule } => {
                let (m, v) = (rule.mean(), rule.variance());
                let t = lambda * g;
                -t * m + t * t * v / S::lit(2.0) + log_exp_payoff(&self.segments, lambda, s + m - t * v, v)
            }
            IncrementLaw::Discrete { points, probs } => {
                let spec = self.problem.spec();
                log_sum_exp(
                    points
                        .iter()
                        .zip(probs)
                        .map(|(&z, &p)| p.ln() - lambda * (g * z - spec.eval(s + z))),
                )
            }
        }
    }
}

/// `log V_{N+1}(s, g)`.
pub fn terminal_log_value<S: Scalar>(s: S, g: S, problem: &DelayedProblem<S>, law: &IncrementLaw<S>) -> S {
    Terminal::new(problem, law).log_value(s, g)
}

/// `V_{N+1}(s, g)`; fails with `OverflowGuard` when the exponent exceeds 700.
pub fn terminal_value<S: Scalar>(s: S, g: S, problem: &DelayedProblem<S>, law: &IncrementLaw<S>) -> Result<S, DpError> {
    let lv = terminal_log_value(s, g, problem, law);
    if lv.is_nan() || lv.abs() > S::lit(700.0) {
        return Err(DpError::OverflowGuard {
            stage: problem.periods() + 1,
            node: 0,
            value: lv.as_f64(),
        });
    }
    Ok(lv.exp())
}

/// Table of `log V_j` on a price grid times a uniform position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid<S> {
    stage: usize,
    s_nodes: Vec<S>,
    g_nodes: Vec<S>,
    /// Row-major, one row per price node.
    log_values: Vec<S>,
}

impl<S: Scalar> ValueGrid<S> {
    pub fn stage(&self) -> usize {
        self.stage
    }
    pub fn s_nodes(&self) -> &[S] {
        &self.s_nodes
    }
    pub fn g_nodes(&self) -> &[S] {
        &self.g_nodes
    }
    pub fn log_values(&self) -> &[S] {
        &self.log_values
    }
    fn row(&self, i: usize) -> &[S] {
        let w = self.g_nodes.len();
        &self.log_values[i * w..(i + 1) * w]
    }
    /// `V_j(s_i, g_k)`.
    pub fn value(&self, i: usize, k: usize) -> S {
        self.row(i)[k].exp()
    }
}

impl<S: Scalar> StageValue<S> for ValueGrid<S> {
    fn stage(&self) -> usize {
        self.stage
    }

    /// Cubic in `g` on each row, monotone cubic across rows in `s`.
    fn log_value(&self, s: S, g: S) -> S {
        let g0 = self.g_nodes[0];
        let hg = self.g_nodes[1] - g0;
        pchip_local(&self.s_nodes, |i| cubic_uniform(g0, hg, self.row(i), g), s)
    }
}

/// `V_j` evaluated on demand from `V_{j+1}`, without a table.
pub struct OnDemand<'a, S> {
    pub next: &'a dyn StageValue<S>,
    pub problem: &'a DelayedProblem<S>,
    pub law: &'a IncrementLaw<S>,
    pub c_grid: &'a [S],
}

impl<S: Scalar> StageValue<S> for OnDemand<'_, S> {
    fn stage(&self) -> usize {
        self.next.stage() - 1
    }
    fn log_value(&self, s: S, g: S) -> S {
        stage_log_value(self.next, self.problem, self.law, self.c_grid, s, g).0
    }
}

/// `log V_j(s, g) = min_c log E[exp(−λgZ) V_{j+1}(s + Z, c)]` and the
/// minimizing `c`, searched by a scan over `c_grid` and golden-section
/// refinement on the bracketing cells.
pub fn stage_log_value<S: Scalar>(
    next: &dyn StageValue<S>,
    problem: &DelayedProblem<S>,
    law: &IncrementLaw<S>,
    c_grid: &[S],
    s: S,
    g: S,
) -> (S, S) {
    let (mut pts, mut lw) = (Vec::with_capacity(law.len()), Vec::with_capacity(law.len()));
    let factor = law.tilted(problem.lambda(), g, &mut pts, &mut lw);
    let (v, c) = nested_min(c_grid, |c| {
        log_sum_exp(pts.iter().zip(&lw).map(|(&z, &w)| w + next.log_value(s + z, c)))
    });
    (factor + v, c)
}

/// One backward stage on the grid `s_nodes × c_grid`.
pub fn backward_step<S: Scalar>(
    next: &dyn StageValue<S>,
    problem: &DelayedProblem<S>,
    law: &IncrementLaw<S>,
    s_nodes: &[S],
    c_grid: &[S],
) -> Result<ValueGrid<S>, DpError> {
    let stage = next.stage() - 1;
    let rows: Vec<Vec<S>> = s_nodes
        .par_iter()
        .map(|&s| {
            c_grid
                .iter()
                .map(|&g| stage_log_value(next, problem, law, c_grid, s, g).0)
                .collect()
        })
        .collect();
    let log_values: Vec<S> = rows.into_iter().flatten().collect();
    if let Some(node) = log_values.iter().position(|v| !v.is_finite()) {
        return Err(DpError::OverflowGuard {
            stage,
            node,
            value: log_values[node].as_f64(),
        });
    }
    Ok(ValueGrid {
        stage,
        s_nodes: s_nodes.to_vec(),
        g_nodes: c_grid.to_vec(),
        log_values,
    })
}

/// Prices reachable from `s0` in `steps` increments of a discrete law, sorted.
pub fn reachable_prices<S: Scalar>(s0: S, points: &[S], steps: usize) -> Vec<S> {
    let mut set = vec![s0];
    for _ in 0..steps {
        let mut next: Vec<S> = set.iter().flat_map(|&s| points.iter().map(move |&z| s + z)).collect();
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = next.iter().fold(S::one(), |m, v| m.max(v.abs()));
        next.dedup_by(|a, b| (*a - *b).abs() <= S::lit(1e-12) * scale);
        set = next;
    }
    set
}

/// Reference-weighted share of untilted increment mass that leaves the grid.
fn clamped_mass<S: Scalar>(problem: &DelayedProblem<S>, law: &IncrementLaw<S>, s_nodes: &[S]) -> S {
    let (lo, hi) = (s_nodes[0], s_nodes[s_nodes.len() - 1]);
    let p = problem.params();
    let var = p.sigma() * p.sigma() * p.horizon();
    let (mut pts, mut lw) = (Vec::new(), Vec::new());
    law.tilted(S::zero(), S::zero(), &mut pts, &mut lw);
    let eps = S::lit(1e-9) * (hi - lo + S::one());
    let (mut out, mut total) = (S::zero(), S::zero());
    for &s in s_nodes {
        let d = s - p.s0();
        let rho = (-d * d / (S::lit(2.0) * var)).exp();
        let off: S = pts
            .iter()
            .zip(&lw)
            .filter(|(&z, _)| s + z < lo - eps || s + z > hi + eps)
            .map(|(_, &w)| w.exp())
            .sum();
        out = out + rho * off;
        total = total + rho;
    }
    out / total
}

/// Log numerator with two-dimensional tables for the later stages and nested
/// searches for `(γ_1, γ_2)`. Discrete laws evaluate stage 3 on demand,
/// which is exact in `c` and cheap for few outcomes; Gaussian laws tabulate
/// it as well.
pub fn numerator_log<S: Scalar>(
    problem: &DelayedProblem<S>,
    law: &IncrementLaw<S>,
    config: &DpConfig<S>,
) -> Result<(S, DpDiagnostics<S>), DpError> {
    if config.delay != Delay::OnePeriod {
        return Err(DpError::Unsupported(
            "the reduced Gaussian engine for the zero-delay diagnostic",
        ));
    }
    if problem.substeps() != 1 {
        return Err(DpError::Unsupported("the reduced Gaussian engine for substeps above 1"));
    }
    let params = problem.params();
    let c_grid = config.g_grid(problem);
    let s_grid_for = |stage: usize| -> Vec<S> {
        match law {
            IncrementLaw::Gaussian { .. } => config.s_grid(problem),
            IncrementLaw::Discrete { points, .. } => reachable_prices(params.s0(), points, stage - 2),
        }
    };
    let n = problem.periods();
    let terminal = Terminal::new(problem, law);
    let mut clamped = S::zero();
    let mut table: Option<ValueGrid<S>> = None;
    let last_table = if law.is_gaussian() { 3 } else { 4 };
    for stage in (last_table..=n).rev() {
        let s_nodes = s_grid_for(stage);
        clamped = clamped.max(clamped_mass(problem, law, &s_nodes));
        if clamped >= S::lit(1e-3) {
            return Err(DpError::Extrapolation {
                stage,
                mass: clamped.as_f64(),
            });
        }
        let next: &dyn StageValue<S> = match &table {
            Some(t) => t,
            None => &terminal,
        };
        table = Some(backward_step(next, problem, law, &s_nodes, &c_grid)?);
    }
    let latest: &dyn StageValue<S> = match &table {
        Some(t) => t,
        None => &terminal,
    };
    let v3_demand = OnDemand {
        next: latest,
        problem,
        law,
        c_grid: &c_grid,
    };
    let v3: &dyn StageValue<S> = if latest.stage() == 4 { &v3_demand } else { latest };

    let s0 = params.s0();
    let (num, g1) = nested_min(&c_grid, |g1| stage_log_value(v3, problem, law, &c_grid, s0, g1).0);
    let g2 = stage_log_value(v3, problem, law, &c_grid, s0, g1).1;
    if !num.is_finite() {
        return Err(DpError::OverflowGuard {
            stage: 1,
            node: 0,
            value: num.as_f64(),
        });
    }
    let s_any = s_grid_for(n.max(4));
    Ok((
        num,
        DpDiagnostics {
            engine: if law.is_gaussian() {
                "gaussian-grid"
            } else {
                "discrete-lattice"
            },
            delay: config.delay,
            s_range: (s_any[0], s_any[s_any.len() - 1]),
            g_range: (c_grid[0], c_grid[c_grid.len() - 1]),
            s_nodes: s_any.len(),
            g_nodes: c_grid.len(),
            quadrature_order: law.len(),
            clamped_mass: clamped,
            initial_positions: (g1, g2),
        },
    ))
}

/// `N · min_c log E[exp(−λcZ)]`: with independent increments the best
/// hedge of nothing is a constant position, whatever the information.
pub fn denominator_log_on_law<S: Scalar>(
    problem: &DelayedProblem<S>,
    law: &IncrementLaw<S>,
    config: &DpConfig<S>,
) -> S {
    let c_grid = config.g_grid(problem);
    let (v, _) = nested_min(&c_grid, |c| law.log_mgf(problem.lambda(), c));
    S::from_usize_lossy(problem.trades()) * v
}
