use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Parameters of the arithmetic price `S_t = s0 + sigma W_t + mu t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<S>", into = "RawParams<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct ModelParams<S> {
    s0: S,
    sigma: S,
    mu: S,
    horizon: S,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("volatility must be strictly positive, got {0}")]
    NonPositiveVolatility(f64),
    #[error("horizon must be strictly positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("initial price and drift must be finite")]
    NonFinite,
}

impl<S: Scalar> ModelParams<S> {
    pub fn new(s0: S, sigma: S, mu: S, horizon: S) -> Result<Self, ParamsError> {
        if !(s0.is_finite() && mu.is_finite() && sigma.is_finite() && horizon.is_finite()) {
            return Err(ParamsError::NonFinite);
        }
        if sigma <= S::zero() {
            return Err(ParamsError::NonPositiveVolatility(sigma.as_f64()));
        }
        if horizon <= S::zero() {
            return Err(ParamsError::NonPositiveHorizon(horizon.as_f64()));
        }
        Ok(Self { s0, sigma, mu, horizon })
    }

    /// `s0 = 0, sigma = 1, mu = 0, T = 1`.
    pub fn standard() -> Self {
        Self::new(S::zero(), S::one(), S::zero(), S::one()).expect("standard parameters are valid")
    }

    pub fn s0(&self) -> S {
        self.s0
    }
    pub fn sigma(&self) -> S {
        self.sigma
    }
    pub fn mu(&self) -> S {
        self.mu
    }
    /// Horizon `T`.
    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn with_s0(self, s0: S) -> Self {
        Self { s0, ..self }
    }
    pub fn with_mu(self, mu: S) -> Result<Self, ParamsError> {
        Self::new(self.s0, self.sigma, mu, self.horizon)
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams<S> {
    s0: S,
    sigma: S,
    mu: S,
    #[serde(rename = "T")]
    horizon: S,
}

impl<S: Scalar> TryFrom<RawParams<S>> for ModelParams<S> {
    type Error = ParamsError;
    fn try_from(raw: RawParams<S>) -> Result<Self, Self::Error> {
        Self::new(raw.s0, raw.sigma, raw.mu, raw.horizon)
    }
}

impl<S> From<ModelParams<S>> for RawParams<S> {
    fn from(p: ModelParams<S>) -> Self {
        Self {
            s0: p.s0,
            sigma: p.sigma,
            mu: p.mu,
            horizon: p.horizon,
        }
    }
}
