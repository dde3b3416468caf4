//! Distribution of one price increment `Z = S_{t_i} − S_{t_{i−1}}`.

use crate::model::{gauss_quadrature, QuadratureError, QuadratureRule};
use crate::{log_sum_exp, Scalar};

/// Increment law used by the backward recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementLaw<S> {
    /// `N(μΔ, σ²Δ)`, integrated with a Gauss-Hermite rule.
    Gaussian { rule: QuadratureRule<S> },
    /// Finitely many outcomes.
    Discrete { points: Vec<S>, probs: Vec<S> },
}

impl<S: Scalar> IncrementLaw<S> {
    pub fn gaussian(mean: S, variance: S, nodes: usize) -> Result<Self, QuadratureError> {
        Ok(Self::Gaussian {
            rule: gauss_quadrature(nodes, mean, variance)?,
        })
    }

    /// `q`-point law with the given mean and variance: the Gauss-Hermite
    /// rule itself, so `q = 2` is the binomial step and `q = 3` the trinomial
    /// step `mean + {−a, 0, a}`, `a = √(3 variance)`, with weights `1/6, 2/3, 1/6`.
    pub fn moment_matched(q: usize, mean: S, variance: S) -> Result<Self, QuadratureError> {
        let rule = gauss_quadrature(q, mean, variance)?;
        Ok(Self::Discrete {
            points: rule.nodes().to_vec(),
            probs: rule.weights().to_vec(),
        })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    pub fn mean(&self) -> S {
        match self {
            Self::Gaussian { rule } => rule.mean(),
            Self::Discrete { points, probs } => points.iter().zip(probs).map(|(&z, &p)| z * p).sum(),
        }
    }

    pub fn variance(&self) -> S {
        match self {
            Self::Gaussian { rule } => rule.variance(),
            Self::Discrete { points, probs } => {
                let m = self.mean();
                points.iter().zip(probs).map(|(&z, &p)| p * (z - m) * (z - m)).sum()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Gaussian { rule } => rule.len(),
            Self::Discrete { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `(log factor, points, log weights)` with
    /// `E[exp(−λgZ) h(Z)] ≈ exp(log factor) · Σ_k exp(log weight_k) h(point_k)`.
    ///
    /// For the Gaussian law the exponential tilt is a mean shift, so the
    /// points move by `−λgσ²Δ` and the factor is the moment generating
    /// function. For a discrete law the weights are reweighted instead.
    pub fn tilted(&self, lambda: S, g: S, points: &mut Vec<S>, log_weights: &mut Vec<S>) -> S {
        points.clear();
        log_weights.clear();
        let t = lambda * g;
        match self {
            Self::Gaussian { rule } => {
                let (m, v) = (rule.mean(), rule.variance());
                let shift = -t * v;
                points.extend(rule.nodes().iter().map(|&z| z + shift));
                log_weights.extend(rule.weights().iter().map(|w| w.ln()));
                -t * m + t * t * v / S::lit(2.0)
            }
            Self::Discrete { points: zs, probs } => {
                points.extend_from_slice(zs);
                log_weights.extend(zs.iter().zip(probs).map(|(&z, &p)| p.ln() - t * z));
                S::zero()
            }
        }
    }

    /// `log E[exp(−λgZ)]`.
    pub fn log_mgf(&self, lambda: S, g: S) -> S {
        let t = lambda * g;
        match self {
            Self::Gaussian { rule } => -t * rule.mean() + t * t * rule.variance() / S::lit(2.0),
            Self::Discrete { points, probs } => log_sum_exp(points.iter().zip(probs).map(|(&z, &p)| p.ln() - t * z)),
        }
    }
}
