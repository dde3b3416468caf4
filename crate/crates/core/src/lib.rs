//! Utility indifference pricing of vanilla options in the Bachelier model
//! when trades can only use price information that is one period old.
//!
//! The crate has four numerical parts that share the types in [`model`]:
//!
//! * [`envelope`]: concave envelope, super-replication price and buy-and-hold hedge.
//! * [`limit`]: the vanishing-delay limit price, a volatility control problem
//!   with quadratic penalty, solved through its scalar transport form.
//! * [`dp`]: discrete-time indifference prices with one-period delay by
//!   backward induction, with a scenario-tree oracle and a convergence study.
//! * [`sim`]: Monte Carlo for the relaxed martingale measures behind the
//!   duality bounds (entropy, martingale tests, weak-duality bound).
//!
//! Everything numerical is generic over [`Scalar`] (`f32`, `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod dp;
pub mod envelope;
pub mod limit;
pub mod model;
pub mod optimize;
mod scalar;
pub mod sim;

pub use scalar::{log_sum_exp, norm_cdf, norm_interval, norm_pdf, norm_sf, pairwise_sum, Scalar};

/// Bachelier parameters in double precision.
pub type Params = model::ModelParams<f64>;
/// Validated payoff in double precision.
pub type Payoff = model::PayoffSpec<f64>;
/// Gauss-Hermite rule in double precision.
pub type Quadrature = model::QuadratureRule<f64>;
/// Envelope result in double precision.
pub type Envelope = envelope::EnvelopeResult<f64>;
/// Limit problem in double precision.
pub type LimitProblem = limit::LimitProblem<f64>;
/// Limit solution in double precision.
pub type LimitSolution = limit::LimitSolution<f64>;
/// Delayed-information pricing problem in double precision.
pub type DelayedProblem = dp::DelayedProblem<f64>;
/// Discrete-time price report in double precision.
pub type PriceReport = dp::PriceReport<f64>;
/// Volatility policy in double precision.
pub type Policy = sim::VolatilityPolicy<f64>;
/// Simulated ensemble in double precision.
pub type Ensemble = sim::PathEnsemble<f64>;
