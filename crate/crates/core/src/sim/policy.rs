use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("partition needs at least two points, got {0}")]
    ShortPartition(usize),
    #[error("partition must start at 0 and be finite and strictly increasing (index {0})")]
    BadPartition(usize),
    #[error("expected {expected} pieces (one per interval after the first), got {got}")]
    PieceCount { expected: usize, got: usize },
    #[error("piece {index}: {reason}")]
    BadPiece { index: usize, reason: &'static str },
}

/// Policy as written in JSON: `{"partition": [...], "pieces": [{"x": [...], "nu": [...]}]}`.
/// Piece `j` (counting from 1) applies on `[t_j, t_{j+1})` and is a function of `x_{t_{j−1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPolicy<S> {
    pub partition: Vec<S>,
    pub pieces: Vec<RawPiece<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPiece<S> {
    pub x: Vec<S>,
    pub nu: Vec<S>,
}

/// Volatility level on one partition interval.
/// Policy level as a function of all observations so far.
pub type HistoryFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;

#[derive(Clone)]
pub enum Piece<S> {
    /// Linear interpolation of `nu` over `x` in the latest observation,
    /// constant beyond the end nodes.
    Latest { x: Vec<S>, nu: Vec<S> },
    /// Function of all observations `(x_{t_0}, …, x_{t_{j−1}})` with a
    /// declared bound and Lipschitz constant.
    History { f: HistoryFn<S>, bound: S, lipschitz: S },
}

impl<S: fmt::Debug> fmt::Debug for Piece<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Latest { x, nu } => f.debug_struct("Latest").field("x", x).field("nu", nu).finish(),
            Piece::History { bound, lipschitz, .. } => f
                .debug_struct("History")
                .field("bound", bound)
                .field("lipschitz", lipschitz)
                .finish_non_exhaustive(),
        }
    }
}

impl<S: Scalar> Piece<S> {
    pub fn constant(nu: S) -> Self {
        Piece::Latest {
            x: vec![S::zero()],
            nu: vec![nu],
        }
    }

    /// Level given the observations `x_{t_0}, …, x_{t_{j−1}}`. The bound is enforced by clamping.
    pub fn eval(&self, observed: &[S]) -> S {
        match self {
            Piece::Latest { x, nu } => {
                let v = observed.last().copied().unwrap_or_else(S::zero);
                interp(x, nu, v)
            }
            Piece::History { f, bound, .. } => f(observed).max(-*bound).min(*bound),
        }
    }

    pub fn bound(&self) -> S {
        match self {
            Piece::Latest { nu, .. } => nu.iter().fold(S::zero(), |m, v| m.max(v.abs())),
            Piece::History { bound, .. } => *bound,
        }
    }

    pub fn lipschitz(&self) -> S {
        match self {
            Piece::Latest { x, nu } => x.windows(2).zip(nu.windows(2)).fold(S::zero(), |m, (xs, ys)| {
                m.max(((ys[1] - ys[0]) / (xs[1] - xs[0])).abs())
            }),
            Piece::History { lipschitz, .. } => *lipschitz,
        }
    }

    fn check(&self, index: usize) -> Result<(), PolicyError> {
        let bad = |reason| PolicyError::BadPiece { index, reason };
        match self {
            Piece::Latest { x, nu } => {
                if x.is_empty() || x.len() != nu.len() {
                    return Err(bad("x and nu must be non-empty and of equal length"));
                }
                if x.iter().chain(nu).any(|v| !v.is_finite()) {
                    return Err(bad("nodes must be finite"));
                }
                if x.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("x must be strictly increasing"));
                }
            }
            Piece::History { bound, lipschitz, .. } => {
                if !(bound.is_finite() && lipschitz.is_finite() && *bound >= S::zero() && *lipschitz >= S::zero()) {
                    return Err(bad(
                        "declared bound and Lipschitz constant must be finite and non-negative",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn interp<S: Scalar>(x: &[S], y: &[S], v: S) -> S {
    let n = x.len();
    if v <= x[0] {
        return y[0];
    }
    if v >= x[n - 1] {
        return y[n - 1];
    }
    let i = x.partition_point(|&p| p <= v) - 1;
    let w = (v - x[i]) / (x[i + 1] - x[i]);
    y[i] + w * (y[i + 1] - y[i])
}

/// Piecewise-constant-in-time volatility profile `ν_t = f_j(x_{t_0}, …, x_{t_{j−1}})`
/// on `[t_j, t_{j+1})`, `j ≥ 1`, and `ν = σ` on `[0, t_1)`.
#[derive(Debug, Clone)]
pub struct VolatilityPolicy<S> {
    partition: Vec<S>,
    pieces: Vec<Piece<S>>,
}

impl<S: Scalar> VolatilityPolicy<S> {
    pub fn new(partition: Vec<S>, pieces: Vec<Piece<S>>) -> Result<Self, PolicyError> {
        if partition.len() < 2 {
            return Err(PolicyError::ShortPartition(partition.len()));
        }
        if partition[0] != S::zero() {
            return Err(PolicyError::BadPartition(0));
        }
        if let Some(i) = partition.windows(2).position(|w| w[1] <= w[0] || !w[1].is_finite()) {
            return Err(PolicyError::BadPartition(i + 1));
        }
        if pieces.len() != partition.len() - 2 {
            return Err(PolicyError::PieceCount {
                expected: partition.len() - 2,
                got: pieces.len(),
            });
        }
        for (i, p) in pieces.iter().enumerate() {
            p.check(i + 1)?;
        }
        Ok(Self { partition, pieces })
    }

    /// `ν ≡ nu` after `t_1` on the given partition.
    pub fn constant(partition: Vec<S>, nu: S) -> Result<Self, PolicyError> {
        let k = partition.len().saturating_sub(2);
        Self::new(partition, vec![Piece::constant(nu); k])
    }

    /// `ν = σ` on `[0, T/2)` and `ν = factor·σ` on `[T/2, T)`.
    pub fn two_level(sigma: S, horizon: S, factor: S) -> Self {
        let half = horizon / S::lit(2.0);
        Self::new(vec![S::zero(), half, horizon], vec![Piece::constant(factor * sigma)])
            .expect("two-level policy is valid")
    }

    pub fn partition(&self) -> &[S] {
        &self.partition
    }
    pub fn pieces(&self) -> &[Piece<S>] {
        &self.pieces
    }
    pub fn horizon(&self) -> S {
        self.partition[self.partition.len() - 1]
    }

    /// Interval index `j` with `t ∈ [t_j, t_{j+1})`; `T` itself maps to the last interval.
    pub fn interval(&self, t: S) -> usize {
        let n = self.partition.len();
        (self.partition.partition_point(|&p| p <= t).max(1) - 1).min(n - 2)
    }

    /// `f_j` for `j ≥ 1` evaluated on `observed = (x_{t_0}, …, x_{t_{j−1}})`, or `sigma` for `j = 0`.
    pub fn level(&self, j: usize, observed: &[S], sigma: S) -> S {
        if j == 0 {
            sigma
        } else {
            self.pieces[j - 1].eval(observed)
        }
    }

    pub fn bound(&self, sigma: S) -> S {
        self.pieces.iter().fold(sigma.abs(), |m, p| m.max(p.bound()))
    }

    pub fn lipschitz(&self) -> S {
        self.pieces.iter().fold(S::zero(), |m, p| m.max(p.lipschitz()))
    }

    /// JSON form, if every piece depends on the latest observation only.
    pub fn to_raw(&self) -> Option<RawPolicy<S>> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Latest { x, nu } => Some(RawPiece {
                    x: x.clone(),
                    nu: nu.clone(),
                }),
                Piece::History { .. } => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(RawPolicy {
            partition: self.partition.clone(),
            pieces,
        })
    }
}

impl<S: Scalar> TryFrom<RawPolicy<S>> for VolatilityPolicy<S> {
    type Error = PolicyError;

    fn try_from(raw: RawPolicy<S>) -> Result<Self, PolicyError> {
        let pieces = raw
            .pieces
            .into_iter()
            .map(|p| Piece::Latest { x: p.x, nu: p.nu })
            .collect();
        Self::new(raw.partition, pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_lookup() {
        let p = VolatilityPolicy::two_level(1.0_f64, 1.0, 2.0);
        assert_eq!(p.interval(0.0), 0);
        assert_eq!(p.interval(0.49), 0);
        assert_eq!(p.interval(0.5), 1);
        assert_eq!(p.interval(1.0), 1);
        assert_eq!(p.level(0, &[], 0.7), 0.7);
        assert_eq!(p.level(1, &[0.0], 1.0), 2.0);
    }

    #[test]
    fn latest_piece_is_clamped_linear() {
        let piece = Piece::Latest {
            x: vec![-1.0_f64, 1.0],
            nu: vec![0.5, 1.5],
        };
        assert_eq!(piece.eval(&[3.0, -5.0]), 0.5);
        assert_eq!(piece.eval(&[0.0]), 1.0);
        assert_eq!(piece.eval(&[4.0]), 1.5);
        assert_eq!(piece.bound(), 1.5);
        assert_eq!(piece.lipschitz(), 0.5);
    }

    #[test]
    fn history_piece_respects_bound() {
        let piece: Piece<f64> = Piece::History {
            f: Arc::new(|xs: &[f64]| xs.iter().sum()),
            bound: 2.0,
            lipschitz: 1.0,
        };
        assert_eq!(piece.eval(&[1.0, 0.5]), 1.5);
        assert_eq!(piece.eval(&[3.0, 0.5]), 2.0);
    }

    #[test]
    fn validation() {
        assert_eq!(
            VolatilityPolicy::<f64>::new(vec![0.0], vec![]).unwrap_err(),
            PolicyError::ShortPartition(1)
        );
        assert_eq!(
            VolatilityPolicy::<f64>::new(vec![0.0, 0.5, 0.4], vec![Piece::constant(1.0)]).unwrap_err(),
            PolicyError::BadPartition(2)
        );
        assert!(matches!(
            VolatilityPolicy::<f64>::new(vec![0.0, 0.5, 1.0], vec![]),
            Err(PolicyError::PieceCount { expected: 1, got: 0 })
        ));
        let bad = Piece::Latest {
            x: vec![1.0, 0.0],
            nu: vec![1.0, 1.0],
        };
        assert!(matches!(
            VolatilityPolicy::new(vec![0.0, 0.5, 1.0], vec![bad]),
            Err(PolicyError::BadPiece { index: 1, .. })
        ));
    }

    #[test]
    fn raw_round_trip() {
        let raw = RawPolicy {
            partition: vec![0.0, 0.25, 0.5, 1.0],
            pieces: vec![
                RawPiece {
                    x: vec![0.0],
                    nu: vec![2.0],
                },
                RawPiece {
                    x: vec![-1.0, 1.0],
                    nu: vec![0.5, 1.0],
                },
            ],
        };
        let p = VolatilityPolicy::try_from(raw.clone()).unwrap();
        assert_eq!(p.to_raw(), Some(raw));
        assert_eq!(p.bound(1.0), 2.0);
        assert_eq!(p.lipschitz(), 0.25);
    }
}
