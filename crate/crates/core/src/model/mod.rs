//! Shared domain types: Bachelier parameters, bounded piecewise-linear
//! payoffs, Gaussian quadrature and reproducible random streams.

mod params;
mod payoff;
mod quadrature;
mod rng;

pub use params::{ModelParams, ParamsError};
pub use payoff::{PayoffError, PayoffSpec, RawPayoff, Segment};
pub use quadrature::{gauss_quadrature, QuadratureError, QuadratureRule, DEFAULT_NODES, MAX_NODES};
pub use rng::{draw_normal_increments, SeededStream};
