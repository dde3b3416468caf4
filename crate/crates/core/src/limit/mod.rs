//! Vanishing-delay limit price.
//!
//! As the delay `H` shrinks with risk aversion `A/H`, indifference prices
//! converge to a volatility control problem with quadratic penalty
//! `(1/(2Aσ²)) ∫(ν − σ)² dt`. Its optimal terminal value is a function of
//! `W_T` alone, which turns the control problem into
//!
//! ```text
//! sup_ζ ∫ f(s0 + ζ(z)) − (1/(2Aσ²)) (ζ(z) − σz)² μ(dz)   s.t.  ∫ ζ dμ = 0,   μ = N(0, T).
//! ```
//!
//! With a multiplier `λ` for the constraint the problem separates into one
//! scalar maximization per point `z`. Because `f` is piecewise linear each
//! scalar problem is piecewise concave-quadratic and is solved exactly.
//!
//! [`limit_value`] discretizes `μ` with Gauss-Hermite nodes. When `f` is not
//! concave the pointwise maximizer can jump as `λ` moves, so on a finite rule
//! the constraint may have no exact root: one node switches branch. The
//! solver then splits that node between its two branches in the proportion
//! that makes the constraint hold, which is the value of the discretized
//! dual. [`exact`] evaluates the same problem against the continuous normal
//! law in closed form, where no jump survives.

pub mod exact;
pub mod oracle;

use serde::Serialize;
use thiserror::Error;

use crate::model::{gauss_quadrature, ModelParams, PayoffSpec, QuadratureError, QuadratureRule, Segment};
use crate::Scalar;

pub use exact::{limit_value_exact, ExactLimit};
pub use oracle::{limit_value_bruteforce, BruteForceLimit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("risk-aversion scale A must be positive and finite, got {0}")]
    NonPositiveRiskAversion(f64),
    #[error("quadrature targets N({mean}, {variance}) but the horizon requires N(0, {horizon})")]
    QuadratureMismatch { mean: f64, variance: f64, horizon: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("no sign change of the constraint within |multiplier| <= {0}")]
    BracketingFailure(f64),
    #[error("brute-force oracle is limited to {max} nodes, got {got}")]
    OracleTooLarge { max: usize, got: usize },
    #[error("brute-force sweep found no feasible profile")]
    OracleInfeasible,
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConfig<S> {
    /// Bisection stops when the multiplier bracket is this narrow.
    pub multiplier_tol: S,
    /// Largest acceptable `|Σ w_i ζ_i|`.
    pub constraint_tol: S,
    /// Bracket expansion gives up beyond this magnitude.
    pub max_multiplier: S,
}

impl<S: Scalar> Default for LimitConfig<S> {
    fn default() -> Self {
        Self {
            multiplier_tol: S::lit(1e-10),
            constraint_tol: S::lit(1e-8),
            max_multiplier: S::lit(1e6),
        }
    }
}

/// Risk-aversion scale, model, payoff and a quadrature rule for `N(0, T)`.
#[derive(Debug, Clone)]
pub struct LimitProblem<S> {
    a: S,
    params: ModelParams<S>,
    spec: PayoffSpec<S>,
    segments: Vec<Segment<S>>,
    quad: QuadratureRule<S>,
}

impl<S: Scalar> LimitProblem<S> {
    pub fn new(a: S, params: ModelParams<S>, spec: PayoffSpec<S>, nodes: usize) -> Result<Self, LimitError> {
        let quad = gauss_quadrature(nodes, S::zero(), params.horizon())?;
        Self::with_quadrature(a, params, spec, quad)
    }

    pub fn with_quadrature(
        a: S,
        params: ModelParams<S>,
        spec: PayoffSpec<S>,
        quad: QuadratureRule<S>,
    ) -> Result<Self, LimitError> {
        if !(a > S::zero() && a.is_finite()) {
            return Err(LimitError::NonPositiveRiskAversion(a.as_f64()));
        }
        let t = params.horizon();
        if quad.mean() != S::zero() || (quad.variance() - t).abs() > S::lit(1e-12) * t {
            return Err(LimitError::QuadratureMismatch {
                mean: quad.mean().as_f64(),
                variance: quad.variance().as_f64(),
                horizon: t.as_f64(),
            });
        }
        let segments = spec.segments();
        Ok(Self {
            a,
            params,
            spec,
            segments,
            quad,
        })
    }

    pub fn a(&self) -> S {
        self.a
    }
    pub fn params(&self) -> &ModelParams<S> {
        &self.params
    }
    pub fn spec(&self) -> &PayoffSpec<S> {
        &self.spec
    }
    pub fn quadrature(&self) -> &QuadratureRule<S> {
        &self.quad
    }

    /// Penalty coefficient `1/(2Aσ²)`.
    pub fn penalty(&self) -> S {
        S::one() / (S::lit(2.0) * self.a * self.params.sigma() * self.params.sigma())
    }

    /// Objective integrand `f(s0 + ζ) − (1/(2Aσ²))(ζ − σz)²` at one point.
    pub fn integrand(&self, z: S, zeta: S) -> S {
        let d = zeta - self.params.sigma() * z;
        self.spec.eval(self.params.s0() + zeta) - self.penalty() * d * d
    }

    /// Quadrature objective of a profile given on the nodes.
    pub fn objective(&self, zeta: &[S]) -> S {
        self.quad
            .nodes()
            .iter()
            .zip(self.quad.weights())
            .zip(zeta)
            .fold(S::zero(), |acc, ((&z, &w), &x)| acc + w * self.integrand(z, x))
    }

    /// `Σ w_i ζ_i`.
    pub fn constraint(&self, zeta: &[S]) -> S {
        self.quad
            .weights()
            .iter()
            .zip(zeta)
            .fold(S::zero(), |acc, (&w, &x)| acc + w * x)
    }

    /// Risk-neutral Bachelier value `Σ w_i f(s0 + σ z_i)`, the `A → 0` limit.
    pub fn bachelier_value(&self) -> S {
        let (s0, sigma) = (self.params.s0(), self.params.sigma());
        self.quad.expect(|z| self.spec.eval(s0 + sigma * z))
    }

    /// Smallest and largest slope of `f`, tails included. The multiplier root
    /// lies between them.
    pub fn slope_range(&self) -> (S, S) {
        self.spec
            .slopes()
            .iter()
            .fold((S::zero(), S::zero()), |(lo, hi), &s| (lo.min(s), hi.max(s)))
    }
}

/// Maximizer of `f(s0 + ζ) − k(ζ − m)² − λζ` over ζ ∈ ℝ, returned as
/// `(ζ*, value)`. Ties go to the smallest ζ.
pub fn maximize_piecewise<S: Scalar>(spec: &PayoffSpec<S>, s0: S, k: S, m: S, lambda: S) -> (S, S) {
    maximize_on_segments(spec, &spec.segments(), s0, k, m, lambda)
}

/// [`maximize_piecewise`] with the segments of `spec` precomputed.
pub fn maximize_on_segments<S: Scalar>(
    spec: &PayoffSpec<S>,
    segments: &[Segment<S>],
    s0: S,
    k: S,
    m: S,
    lambda: S,
) -> (S, S) {
    let two_k = S::lit(2.0) * k;
    let mut best = (S::nan(), S::neg_infinity());
    for seg in segments {
        let vertex = m + (seg.slope - lambda) / two_k;
        let zeta = vertex.max(seg.lo - s0).min(seg.hi - s0);
        let d = zeta - m;
        let value = spec.eval(s0 + zeta) - k * d * d - lambda * zeta;
        if value > best.1 {
            best = (zeta, value);
        }
    }
    best
}

/// Global maximizer over ζ of `f(s0+ζ) − (1/(2Aσ²))(ζ − σz)² − λζ`.
pub fn pointwise_argmax<S: Scalar>(z: S, multiplier: S, problem: &LimitProblem<S>) -> S {
    let p = &problem.params;
    maximize_on_segments(
        &problem.spec,
        &problem.segments,
        p.s0(),
        problem.penalty(),
        p.sigma() * z,
        multiplier,
    )
    .0
}

/// Pointwise maximizers at every quadrature node.
pub fn argmax_profile<S: Scalar>(multiplier: S, problem: &LimitProblem<S>) -> Vec<S> {
    problem
        .quad
        .nodes()
        .iter()
        .map(|&z| pointwise_argmax(z, multiplier, problem))
        .collect()
}

/// Outcome of the multiplier search.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierRoot<S> {
    /// Multiplier with the smallest `|G|` seen during bisection.
    pub multiplier: S,
    pub residual: S,
    /// Final bracket with `G(lower) >= 0 >= G(upper)`.
    pub lower: S,
    pub upper: S,
    pub constraint_lower: S,
    pub constraint_upper: S,
    pub iterations: usize,
}

/// Root of the nonincreasing constraint map `G(λ) = Σ w_i ζ*_λ(z_i)` by
/// bisection on an expanding bracket.
pub fn multiplier_root<S: Scalar>(
    problem: &LimitProblem<S>,
    config: &LimitConfig<S>,
) -> Result<MultiplierRoot<S>, LimitError> {
    let g = |lambda: S| problem.constraint(&argmax_profile(lambda, problem));
    let two = S::lit(2.0);

    let mut lo = -S::one();
    let mut g_lo = g(lo);
    while g_lo < S::zero() {
        lo = lo * two;
        if lo.abs() > config.max_multiplier {
            return Err(LimitError::BracketingFailure(config.max_multiplier.as_f64()));
        }
        g_lo = g(lo);
    }
    let mut hi = S::one();
    let mut g_hi = g(hi);
    while g_hi > S::zero() {
        hi = hi * two;
        if hi > config.max_multiplier {
            return Err(LimitError::BracketingFailure(config.max_multiplier.as_f64()));
        }
        g_hi = g(hi);
    }

    let (mut best, mut best_res) = if g_lo.abs() <= g_hi.abs() {
        (lo, g_lo.abs())
    } else {
        (hi, g_hi.abs())
    };
    let mut iterations = 0;
    while hi - lo > config.multiplier_tol && iterations < 200 {
        iterations += 1;
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.abs() < best_res {
            best = mid;
            best_res = gm.abs();
        }
        if gm == S::zero() {
            lo = mid;
            hi = mid;
            g_lo = gm;
            g_hi = gm;
            break;
        }
        if gm > S::zero() {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    Ok(MultiplierRoot {
        multiplier: best,
        residual: best_res,
        lower: lo,
        upper: hi,
        constraint_lower: g_lo,
        constraint_upper: g_hi,
        iterations,
    })
}

/// Nodes whose maximizer jumps between the two ends of the final bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitNodes<S> {
    /// Weight on the lower-multiplier profile.
    pub theta: S,
    pub nodes: Vec<usize>,
    pub lower_branch: Vec<S>,
    pub upper_branch: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSolution<S> {
    pub multiplier: S,
    /// Quadrature nodes `z_i`.
    pub nodes: Vec<S>,
    /// `ζ*(z_i)`; at split nodes this is the θ-average of the two branches,
    /// which keeps `Σ w_i ζ_i = 0`.
    pub zeta_values: Vec<S>,
    pub value: S,
    pub constraint_residual: S,
    /// Present when the constraint could only be met by splitting nodes.
    pub split: Option<SplitNodes<S>>,
}

/// Limit value on the problem's quadrature rule.
pub fn limit_value<S: Scalar>(problem: &LimitProblem<S>) -> Result<LimitSolution<S>, LimitError> {
    limit_value_with(problem, &LimitConfig::default())
}

pub fn limit_value_with<S: Scalar>(
    problem: &LimitProblem<S>,
    config: &LimitConfig<S>,
) -> Result<LimitSolution<S>, LimitError> {
    let root = multiplier_root(problem, config)?;
    let nodes = problem.quad.nodes().to_vec();

    if root.lower == root.upper || root.constraint_lower == root.constraint_upper {
        let zeta = argmax_profile(root.multiplier, problem);
        return Ok(LimitSolution {
            multiplier: root.multiplier,
            value: problem.objective(&zeta),
            constraint_residual: problem.constraint(&zeta).abs(),
            zeta_values: zeta,
            nodes,
            split: None,
        });
    }

    // Mix the two bracket profiles so that the constraint holds exactly. For
    // a continuous constraint map the profiles agree to bisection accuracy and
    // this is just the root; at a jump it is the split-node relaxation.
    let upper = argmax_profile(root.upper, problem);
    let lower = argmax_profile(root.lower, problem);
    let (g_lo, g_hi) = (problem.constraint(&lower), problem.constraint(&upper));
    let theta = if g_lo == g_hi { S::one() } else { -g_hi / (g_lo - g_hi) };
    let theta = theta.max(S::zero()).min(S::one());
    let value = theta * problem.objective(&lower) + (S::one() - theta) * problem.objective(&upper);
    let zeta: Vec<S> = lower
        .iter()
        .zip(&upper)
        .map(|(&a, &b)| theta * a + (S::one() - theta) * b)
        .collect();

    let jump_tol = config.constraint_tol.sqrt();
    let split_nodes: Vec<usize> = lower
        .iter()
        .zip(&upper)
        .enumerate()
        .filter(|(_, (a, b))| (**a - **b).abs() > jump_tol * (S::one() + a.abs()))
        .map(|(i, _)| i)
        .collect();
    let split = (!split_nodes.is_empty()).then(|| SplitNodes {
        theta,
        lower_branch: split_nodes.iter().map(|&i| lower[i]).collect(),
        upper_branch: split_nodes.iter().map(|&i| upper[i]).collect(),
        nodes: split_nodes,
    });

    Ok(LimitSolution {
        multiplier: (root.lower + root.upper) / S::lit(2.0),
        constraint_residual: problem.constraint(&zeta).abs(),
        zeta_values: zeta,
        value,
        nodes,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_NODES;

    fn problem(spec: PayoffSpec<f64>, s0: f64, a: f64, nodes: usize) -> LimitProblem<f64> {
        LimitProblem::new(a, ModelParams::standard().with_s0(s0), spec, nodes).unwrap()
    }

    fn capped() -> PayoffSpec<f64> {
        PayoffSpec::capped_call(0.0, 1.0).unwrap()
    }
    fn fly() -> PayoffSpec<f64> {
        PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_payoff_gives_penalty_vertex() {
        let p = problem(PayoffSpec::constant(0.0).unwrap(), 0.0, 1.5, 16);
        for z in [-2.0, -0.3, 0.0, 1.7] {
            assert!((pointwise_argmax(z, 0.0, &p) - z).abs() < 1e-15);
        }
        let c = problem(PayoffSpec::constant(0.7).unwrap(), 0.2, 3.0, 16);
        assert!((pointwise_argmax(0.4, 0.0, &c) - 0.4).abs() < 1e-15);
        assert!((c.integrand(0.4, 0.4) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn capped_call_argmax_matches_dense_grid() {
        // s0 = 0, A = 2, σ = 1, z = 0, λ = 0: maximize clamp(ζ,0,1) − ζ²/4.
        let p = problem(capped(), 0.0, 2.0, 16);
        let got = pointwise_argmax(0.0, 0.0, &p);
        let g = |x: f64| capped().eval(x) - x * x / 4.0;
        let n = 1_000_000;
        let (mut bx, mut bv) = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let x = -5.0 + 10.0 * i as f64 / n as f64;
            if g(x) > bv {
                bv = g(x);
                bx = x;
            }
        }
        let refined = crate::optimize::golden_section(|x| -g(x), bx - 1e-5, bx + 1e-5, 1e-12);
        assert!((got - refined.x).abs() < 1e-6, "{got} vs {}", refined.x);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_break_prefers_smallest_zeta() {
        let twin = PayoffSpec::new(
            vec![-3.0_f64, -2.0, -1.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let (z, v) = maximize_piecewise(&twin, 0.0, 0.01, 0.0, 0.0);
        assert_eq!(z, -2.0);
        assert!((v - 0.96).abs() < 1e-15);
    }

    #[test]
    fn zero_payoff_root_is_zero() {
        let p = problem(PayoffSpec::constant(0.0).unwrap(), 0.0, 2.0, 32);
        let sol = limit_value(&p).unwrap();
        assert!(sol.multiplier.abs() < 1e-9);
        assert!(sol.value.abs() < 1e-12);
        assert!(sol.constraint_residual < 1e-12);
        assert!(sol.split.is_none());
    }

    #[test]
    fn symmetric_butterfly_root_is_zero() {
        let p = problem(fly(), 0.0, 2.0, 32);
        let root = multiplier_root(&p, &LimitConfig::default()).unwrap();
        assert!(root.multiplier.abs() < 1e-9, "{}", root.multiplier);
    }

    #[test]
    fn constant_payoff_value_for_every_a() {
        for a in [1e-3, 0.5, 2.0, 1e3] {
            let p = problem(PayoffSpec::constant(0.37).unwrap(), 0.0, a, 24);
            let v = limit_value(&p).unwrap().value;
            assert!((v - 0.37).abs() < 1e-12, "A={a}: {v}");
        }
    }

    #[test]
    fn small_and_large_a_limits() {
        let small = problem(capped(), 0.5, 1e-4, DEFAULT_NODES);
        let v = limit_value(&small).unwrap().value;
        assert!((v - small.bachelier_value()).abs() < 1e-2);
        let large = problem(capped(), 0.5, 1e4, DEFAULT_NODES);
        let v = limit_value(&large).unwrap().value;
        assert!((v - 1.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn solution_invariants() {
        for (spec, s0) in [(capped(), 0.5), (fly(), 0.0), (capped(), -0.3)] {
            for a in [0.5, 2.0, 10.0] {
                let p = problem(spec.clone(), s0, a, DEFAULT_NODES);
                let sol = limit_value(&p).unwrap();
                assert!(sol.constraint_residual <= 1e-8);
                assert!(sol.value >= p.bachelier_value() - 1e-10);
                assert!(sol.value <= spec.sup() + 1e-12);
                assert_eq!(sol.zeta_values.len(), DEFAULT_NODES);
            }
        }
    }

    #[test]
    fn jump_is_resolved_by_splitting_one_node() {
        // Capped call with A = 10 on 12 nodes has a branch jump at the root.
        let p = problem(capped(), 0.5, 10.0, 12);
        let sol = limit_value(&p).unwrap();
        let split = sol.split.as_ref().expect("expected a split node");
        assert_eq!(split.nodes.len(), 1);
        assert!(split.theta > 0.0 && split.theta < 1.0);
        assert!(sol.constraint_residual < 1e-12);
        // the relaxed value lies between the two pure bracket profiles' values
        let lo = argmax_profile(sol.multiplier - 1e-6, &p);
        let hi = argmax_profile(sol.multiplier + 1e-6, &p);
        let (a, b) = (p.objective(&lo), p.objective(&hi));
        assert!(sol.value <= a.max(b) && sol.value >= a.min(b));
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = ModelParams::standard();
        assert!(matches!(
            LimitProblem::new(0.0, params, capped(), 8),
            Err(LimitError::NonPositiveRiskAversion(_))
        ));
        let q = gauss_quadrature(8, 0.0, 2.0).unwrap();
        assert!(matches!(
            LimitProblem::with_quadrature(1.0, params, capped(), q),
            Err(LimitError::QuadratureMismatch { .. })
        ));
    }

    #[test]
    fn single_precision_solve() {
        let p = LimitProblem::<f32>::new(
            2.0,
            ModelParams::standard(),
            PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap(),
            16,
        )
        .unwrap();
        let cfg = LimitConfig {
            multiplier_tol: 1e-6,
            constraint_tol: 1e-4,
            max_multiplier: 1e6,
        };
        let sol = limit_value_with(&p, &cfg).unwrap();
        let dbl = problem(fly(), 0.0, 2.0, 16);
        let reference = limit_value(&dbl).unwrap().value;
        assert!((sol.value as f64 - reference).abs() < 1e-4);
    }
}
