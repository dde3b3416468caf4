//! Monte Carlo for the relaxed martingale measures used on the dual side.
//!
//! For a volatility profile `ν` and delay `H`, the measure `Q` makes `X` a
//! Brownian motion while
//!
//! ```text
//! S_t = s0 + σX_t + ∫_0^t (μ − σκ_u(X)) du,
//! κ_t = (μ − (f_j − σ)/H · Φ(X_t − X_{(t−H)∨t_j})) / σ   on [t_j, t_{j+1}),
//! ```
//!
//! with `Φ` the unit clamp. Conditional on prices up to `t − H` the clamp has
//! mean zero, so `S` keeps a martingale property relative to the delayed
//! information, and `S_T` approaches `s0 + ∫ν dW` in law as `H → 0`. Paths
//! are simulated directly under `Q`: `X` is drawn as a Brownian motion and
//! `S` is rebuilt pathwise by the trapezoid rule. The density is never formed;
//! the entropy is `(1/2) E_Q ∫κ² dt`.

mod paths;
mod policy;
mod stats;

use thiserror::Error;

pub use paths::{clamp_unit, drift_kappa, simulate_paths, simulate_paths_with, PathEnsemble, SimOptions, MIN_PATHS};
pub use policy::{HistoryFn, Piece, PolicyError, RawPiece, RawPolicy, VolatilityPolicy};
pub use stats::{
    coupled_reference, default_test_functions, default_time_pairs, deterministic_entropy_limit, dual_report,
    entropy_estimate, entropy_lower_bound_check, ks_critical_99, ks_statistic, martingale_csv,
    reference_terminal_sample, relaxed_martingale_test, scaled_entropy, terminal_law_distance, weak_duality_bound,
    DualReport, EntropyBoundPair, Estimate, KsReport, MartingaleStat, TestFunction, MARTINGALE_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("step {delta} does not resolve the delay window {h}: need delta <= h/10")]
    ResolutionTooCoarse { delta: f64, h: f64 },
    #[error("delay must be positive and finite, got {0}")]
    NonPositiveDelay(f64),
    #[error("at least {MIN_PATHS} paths are required, got {0}")]
    TooFewPaths(usize),
    #[error("policy horizon {policy} differs from model horizon {params}")]
    HorizonMismatch { policy: f64, params: f64 },
    #[error("partition point {index} is closer than the delay {h} to its predecessor")]
    DelayWindow { index: usize, h: f64 },
    #[error("invalid time pair ({s}, {t})")]
    InvalidPair { s: f64, t: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
