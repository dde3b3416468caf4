//! Discrete-time indifference prices with a one-period information delay.
//!
//! Trading happens at `t_i = iT/N`. The position `γ_i` held over
//! `(t_{i−1}, t_i]` is chosen at `t_{i−1}` knowing prices up to `t_{i−2}`
//! only, so `H = Δ = T/N`. [`DelayedProblem::with_substeps`] refines the
//! trading grid to `H/k` while keeping the delay at `H`; only the Gaussian
//! engine supports `k > 1`. The seller's indifference price is
//!
//! ```text
//! π = (1/λ) ( log inf_γ E[exp(−λ(Σ γ_i ΔS_i − f(S_T)))] − log inf_γ E[exp(−λ Σ γ_i ΔS_i)] ).
//! ```
//!
//! The second infimum is `exp(−μ²T/(2σ²))`, attained by the constant
//! position `μ/(λσ²)`. The first is computed by backward induction on the
//! state `(s, g)`: `s` is the last observed price `S_{t_{j−2}}` and `g` the
//! committed position `γ_{j−1}`, which multiplies the increment about to be
//! revealed. With `V_{N+1}(s, g) = E[exp(−λ(gZ − f(s+Z)))]`,
//!
//! ```text
//! V_j(s, g) = min_c E[exp(−λgZ) V_{j+1}(s + Z, c)],    j = N, …, 3,
//! ```
//!
//! and the first two positions are deterministic and found by nested
//! one-dimensional searches.
//!
//! Under Gaussian increments the tilt `exp(−λgZ)` only shifts the mean, so
//! `V_j(s, g) = M(g) exp(K_j(s + m_g))` for a one-dimensional `K_j`; the
//! [`reduced`] engine works with these profiles and is what
//! [`indifference_price_dp`] uses. The two-dimensional tables of [`grid`]
//! handle arbitrary increment laws, in particular the discrete laws on which
//! [`tree`] enumerates strategies exhaustively.

pub mod grid;
pub mod interp;
pub mod law;
pub mod reduced;
pub mod study;
pub mod tree;

use serde::Serialize;
use thiserror::Error;

use crate::limit::LimitError;
use crate::model::{ModelParams, PayoffSpec, QuadratureError};
use crate::Scalar;

pub use grid::{backward_step, stage_log_value, terminal_log_value, terminal_value, StageValue, Terminal, ValueGrid};
pub use law::IncrementLaw;
pub use study::{convergence_csv, convergence_study, ConvergenceRow, CONVERGENCE_HEADER, STUDY_SUBSTEPS};
pub use tree::{indifference_price_tree_oracle, TreeOracle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("need at least 2 trading periods, got {0}")]
    TooFewPeriods(usize),
    #[error("risk aversion must be positive and finite, got {0}")]
    NonPositiveRiskAversion(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("value at stage {stage}, node {node} is not finite in log space ({value})")]
    OverflowGuard { stage: usize, node: usize, value: f64 },
    #[error("stage {stage}: {mass:.3e} of the reference quadrature mass left the price grid (limit 1e-3)")]
    Extrapolation { stage: usize, mass: f64 },
    #[error("tree oracle supports at most 3 periods, got {0}")]
    TreeTooDeep(usize),
    #[error("operation requires {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Pricing problem on the uniform grid `t_i = iT/N` with one-period delay.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedProblem<S> {
    params: ModelParams<S>,
    spec: PayoffSpec<S>,
    n: usize,
    substeps: usize,
    lambda: S,
}

impl<S: Scalar> DelayedProblem<S> {
    pub fn new(params: ModelParams<S>, spec: PayoffSpec<S>, n: usize, lambda: S) -> Result<Self, DpError> {
        if n < 2 {
            return Err(DpError::TooFewPeriods(n));
        }
        if !(lambda > S::zero() && lambda.is_finite()) {
            return Err(DpError::NonPositiveRiskAversion(lambda.as_f64()));
        }
        Ok(Self {
            params,
            spec,
            n,
            substeps: 1,
            lambda,
        })
    }

    /// Problem with `λ = A·N/T`, the scaling under which prices converge to the limit value.
    pub fn scaled(params: ModelParams<S>, spec: PayoffSpec<S>, n: usize, a: S) -> Result<Self, DpError> {
        let lambda = a * S::from_usize_lossy(n) / params.horizon();
        Self::new(params, spec, n, lambda)
    }

    pub fn params(&self) -> &ModelParams<S> {
        &self.params
    }
    pub fn spec(&self) -> &PayoffSpec<S> {
        &self.spec
    }
    pub fn periods(&self) -> usize {
        self.n
    }
    pub fn lambda(&self) -> S {
        self.lambda
    }
    /// Trades every `H/k` while keeping the delay `H = T/N`. With `k = 1`
    /// (the default) trading and delay share one grid.
    pub fn with_substeps(mut self, k: usize) -> Result<Self, DpError> {
        if k == 0 {
            return Err(DpError::InvalidGrid("substeps must be at least 1"));
        }
        self.substeps = k;
        Ok(self)
    }
    pub fn substeps(&self) -> usize {
        self.substeps
    }
    /// Delay measured in trading periods, equal to `substeps`.
    pub fn delay_periods(&self) -> usize {
        self.substeps
    }
    /// Delay `H = T/N`.
    pub fn delta(&self) -> S {
        self.params.horizon() / S::from_usize_lossy(self.n)
    }
    /// Trading period `H/k`.
    pub fn step(&self) -> S {
        self.delta() / S::from_usize_lossy(self.substeps)
    }
    /// Number of trading periods `N·k`.
    pub fn trades(&self) -> usize {
        self.n * self.substeps
    }

    /// Position minimizing `E[exp(−λgZ)]` under Gaussian increments.
    pub fn merton_position(&self) -> S {
        let p = &self.params;
        p.mu() / (self.lambda * p.sigma() * p.sigma())
    }

    /// Gaussian law of one trading-period increment.
    pub fn gaussian_law(&self, nodes: usize) -> Result<IncrementLaw<S>, DpError> {
        let d = self.step();
        let p = &self.params;
        Ok(IncrementLaw::gaussian(p.mu() * d, p.sigma() * p.sigma() * d, nodes)?)
    }

    /// `q`-point moment-matched increment law.
    pub fn discrete_law(&self, q: usize) -> Result<IncrementLaw<S>, DpError> {
        let d = self.step();
        let p = &self.params;
        Ok(IncrementLaw::moment_matched(q, p.mu() * d, p.sigma() * p.sigma() * d)?)
    }
}

/// Information available to the positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Delay {
    /// `γ_i` sees prices up to `t_{i−2}`.
    OnePeriod,
    /// Diagnostic: `γ_i` sees prices up to `t_{i−1}`.
    None,
}

/// Discretization knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig<S> {
    pub s_nodes: usize,
    pub g_nodes: usize,
    pub quad_nodes: usize,
    /// Price grid half-width in units of `σ√T`.
    pub s_span: S,
    /// Position grid half-width in units of the payoff's Lipschitz constant.
    pub g_span: S,
    /// Minimum price nodes per standard deviation of one trading-period
    /// increment; raises `s_nodes` when the trading step is small.
    pub s_density: S,
    pub delay: Delay,
}

impl<S: Scalar> Default for DpConfig<S> {
    fn default() -> Self {
        Self {
            s_nodes: 161,
            g_nodes: 81,
            quad_nodes: 32,
            s_span: S::lit(6.0),
            g_span: S::lit(4.0),
            s_density: S::lit(3.5),
            delay: Delay::OnePeriod,
        }
    }
}

impl<S: Scalar> DpConfig<S> {
    /// Same knobs with both grids doubled.
    pub fn refined(&self) -> Self {
        Self {
            s_nodes: 2 * self.s_nodes - 1,
            g_nodes: 2 * self.g_nodes - 1,
            s_density: S::lit(2.0) * self.s_density,
            ..*self
        }
    }

    fn check(&self) -> Result<(), DpError> {
        if self.s_nodes < 4 {
            return Err(DpError::InvalidGrid("need at least 4 price nodes"));
        }
        if self.g_nodes < 3 {
            return Err(DpError::InvalidGrid("need at least 3 position nodes"));
        }
        if !(self.s_span > S::zero() && self.g_span > S::zero()) {
            return Err(DpError::InvalidGrid("grid spans must be positive"));
        }
        if !(self.s_density >= S::zero() && self.s_density.is_finite()) {
            return Err(DpError::InvalidGrid(
                "price node density must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Uniform price grid `s0 ± s_span σ√T` with at least `s_nodes` nodes and
    /// spacing no wider than `σ√step / s_density`.
    pub fn s_grid(&self, problem: &DelayedProblem<S>) -> Vec<S> {
        let params = problem.params();
        let half = self.s_span * params.sigma() * params.horizon().sqrt();
        let sd = params.sigma() * problem.step().sqrt();
        let dense = (S::lit(2.0) * half * self.s_density / sd).ceil().as_f64() as usize + 1;
        let nodes = self.s_nodes.max(dense);
        crate::optimize::linspace(params.s0() - half, params.s0() + half, nodes)
    }

    /// Uniform position grid `μ/(λσ²) ± g_span · Lip(f)`; a constant payoff
    /// uses half-width `g_span`.
    pub fn g_grid(&self, problem: &DelayedProblem<S>) -> Vec<S> {
        let lip = problem.spec.lipschitz();
        let scale = if lip > S::zero() { lip } else { S::one() };
        let c = problem.merton_position();
        let half = self.g_span * scale;
        crate::optimize::linspace(c - half, c + half, self.g_nodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpDiagnostics<S> {
    pub engine: &'static str,
    pub delay: Delay,
    pub s_range: (S, S),
    pub g_range: (S, S),
    pub s_nodes: usize,
    pub g_nodes: usize,
    pub quadrature_order: usize,
    /// Largest reference-weighted share of increment mass evaluated off the price grid.
    pub clamped_mass: S,
    /// Optimal deterministic `(γ_1, γ_2)`.
    pub initial_positions: (S, S),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceReport<S> {
    pub numerator_log: S,
    pub denominator_log: S,
    pub price: S,
    pub diagnostics: DpDiagnostics<S>,
}

/// `log inf_γ E[exp(−λ Σ γ_i ΔS_i)] = −μ²T/(2σ²)`, for any delay and `λ`.
pub fn denominator_log<S: Scalar>(params: &ModelParams<S>) -> S {
    let (mu, sigma) = (params.mu(), params.sigma());
    -mu * mu * params.horizon() / (S::lit(2.0) * sigma * sigma)
}

/// `exp(−μ²T/(2σ²))`.
pub fn denominator_value<S: Scalar>(params: &ModelParams<S>, _lambda: S) -> S {
    denominator_log(params).exp()
}

/// Indifference price with Gaussian increments and default discretization.
pub fn indifference_price_dp<S: Scalar>(problem: &DelayedProblem<S>) -> Result<PriceReport<S>, DpError> {
    indifference_price_dp_with(problem, &DpConfig::default())
}

/// Indifference price with Gaussian increments.
pub fn indifference_price_dp_with<S: Scalar>(
    problem: &DelayedProblem<S>,
    config: &DpConfig<S>,
) -> Result<PriceReport<S>, DpError> {
    config.check()?;
    let (num, diagnostics) = reduced::numerator_log(problem, config)?;
    Ok(report(problem, num, denominator_log(&problem.params), diagnostics))
}

/// Indifference price for an arbitrary increment law using the two-dimensional
/// tables. The denominator is recomputed on the same law, since the closed
/// form holds only for Gaussian increments. Discrete laws use their exact
/// reachable price lattice.
pub fn indifference_price_on_law<S: Scalar>(
    problem: &DelayedProblem<S>,
    law: &IncrementLaw<S>,
    config: &DpConfig<S>,
) -> Result<PriceReport<S>, DpError> {
    config.check()?;
    let (num, diagnostics) = grid::numerator_log(problem, law, config)?;
    let den = grid::denominator_log_on_law(problem, law, config);
    Ok(report(problem, num, den, diagnostics))
}

fn report<S: Scalar>(problem: &DelayedProblem<S>, num: S, den: S, diagnostics: DpDiagnostics<S>) -> PriceReport<S> {
    PriceReport {
        numerator_log: num,
        denominator_log: den,
        price: (num - den) / problem.lambda,
        diagnostics,
    }
}
