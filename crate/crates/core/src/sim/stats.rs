use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::paths::clamp_unit;
use super::{PathEnsemble, SimError, VolatilityPolicy};
use crate::model::{ModelParams, PayoffSpec, SeededStream};
use crate::{pairwise_sum, Scalar};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<S> {
    pub value: S,
    pub stderr: S,
}

impl<S: Scalar> Estimate<S> {
    pub fn from_samples(samples: &[S]) -> Self {
        let n = S::from_usize_lossy(samples.len());
        let mean = pairwise_sum(samples) / n;
        let sq: Vec<S> = samples.iter().map(|&v| (v - mean) * (v - mean)).collect();
        let var = if samples.len() > 1 {
            pairwise_sum(&sq) / (n - S::one())
        } else {
            S::zero()
        };
        Self {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }

    pub fn scaled(self, c: S) -> Self {
        Self {
            value: c * self.value,
            stderr: c.abs() * self.stderr,
        }
    }

    /// `|value| ≤ k·stderr`, with a small absolute allowance for exact zeros.
    pub fn within(&self, k: S) -> bool {
        self.value.abs() <= k * self.stderr + S::lit(1e-12)
    }
}

/// Relative entropy `E_Q[log dQ/dP] = (1/2) E_Q[∫κ² dt]`.
pub fn entropy_estimate<S: Scalar>(ensemble: &PathEnsemble<S>) -> Estimate<S> {
    let half = S::lit(0.5);
    let v: Vec<S> = (0..ensemble.paths())
        .map(|p| half * ensemble.kappa_sq_integral(p))
        .collect();
    Estimate::from_samples(&v)
}

/// `H_n` times the entropy; tends to `(1/(2σ²)) E∫(ν − σ)² dt`.
pub fn scaled_entropy<S: Scalar>(ensemble: &PathEnsemble<S>) -> Estimate<S> {
    entropy_estimate(ensemble).scaled(ensemble.h())
}

/// `(1/(2σ²)) E∫(ν_t − σ)² dt` for a policy whose levels do not depend on the path.
pub fn deterministic_entropy_limit<S: Scalar>(policy: &VolatilityPolicy<S>, params: &ModelParams<S>) -> S {
    let sigma = params.sigma();
    let part = policy.partition();
    let mut total = S::zero();
    for j in 1..part.len() - 1 {
        let nu = policy.level(j, &vec![S::zero(); j], sigma);
        total = total + (nu - sigma) * (nu - sigma) * (part[j + 1] - part[j]);
    }
    total / (S::lit(2.0) * sigma * sigma)
}

/// Bounded test function of the path observed up to `(s − H)⁺`. `at` is a
/// fraction of that window; the observation time is rounded down to a stored time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction<S> {
    Constant,
    Sign { at: S },
    Clamp { at: S },
}

impl<S: Scalar> TestFunction<S> {
    pub fn id(&self) -> String {
        match self {
            TestFunction::Constant => "const".to_string(),
            TestFunction::Sign { at } => format!("sign@{:.3}", at.as_f64()),
            TestFunction::Clamp { at } => format!("clamp@{:.3}", at.as_f64()),
        }
    }
}

/// Constant, plus sign and unit clamp of `X` at 1/3, 2/3 and all of the observed window.
pub fn default_test_functions<S: Scalar>() -> Vec<TestFunction<S>> {
    let mut out = vec![TestFunction::Constant];
    for k in 1..=3 {
        let at = S::from_usize_lossy(k) / S::lit(3.0);
        out.push(TestFunction::Sign { at });
        out.push(TestFunction::Clamp { at });
    }
    out
}

/// All ordered pairs of partition points.
pub fn default_time_pairs<S: Scalar>(policy: &VolatilityPolicy<S>) -> Vec<(S, S)> {
    let p = policy.partition();
    let mut out = Vec::new();
    for i in 0..p.len() {
        for k in i + 1..p.len() {
            out.push((p[i], p[k]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleStat<S> {
    pub s: S,
    pub t: S,
    pub test: String,
    pub statistic: S,
    pub stderr: S,
}

impl<S: Scalar> MartingaleStat<S> {
    pub fn z(&self) -> S {
        if self.stderr > S::zero() {
            self.statistic / self.stderr
        } else {
            S::zero()
        }
    }
}

/// Frozen CSV header of [`MartingaleStat`] rows.
pub const MARTINGALE_HEADER: &str = "s,t,test,statistic,stderr,z";

pub fn martingale_csv<S: Scalar>(stats: &[MartingaleStat<S>]) -> String {
    let mut out = String::from(MARTINGALE_HEADER);
    out.push('\n');
    for m in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.s,
            m.t,
            m.test,
            m.statistic,
            m.stderr,
            m.z()
        ));
    }
    out
}

/// Sample means of `(S_t − S_s) h(X observed up to (s − H)⁺)`. Times are
/// rounded down to stored times; the reported `s`, `t` are the rounded ones.
pub fn relaxed_martingale_test<S: Scalar>(
    ensemble: &PathEnsemble<S>,
    pairs: &[(S, S)],
    tests: &[TestFunction<S>],
) -> Result<Vec<MartingaleStat<S>>, SimError> {
    let mut out = Vec::with_capacity(pairs.len() * tests.len());
    for &(s, t) in pairs {
        if !(s <= t && s >= S::zero() && t <= ensemble.params().horizon()) {
            return Err(SimError::InvalidPair {
                s: s.as_f64(),
                t: t.as_f64(),
            });
        }
        let (rs, rt) = (ensemble.record_floor(s), ensemble.record_floor(t));
        let s_snap = ensemble.record_time(rs);
        let window = (s_snap - ensemble.h()).max(S::zero());
        for test in tests {
            let h_of = |p: usize| -> S {
                let obs = |at: S| ensemble.x(p, ensemble.record_floor(at * window));
                match *test {
                    TestFunction::Constant => S::one(),
                    TestFunction::Sign { at } => {
                        let v = obs(at);
                        if v > S::zero() {
                            S::one()
                        } else if v < S::zero() {
                            -S::one()
                        } else {
                            S::zero()
                        }
                    }
                    TestFunction::Clamp { at } => clamp_unit(obs(at)),
                }
            };
            let v: Vec<S> = (0..ensemble.paths())
                .map(|p| (ensemble.s(p, rt) - ensemble.s(p, rs)) * h_of(p))
                .collect();
            let e = Estimate::from_samples(&v);
            out.push(MartingaleStat {
                s: s_snap,
                t: ensemble.record_time(rt),
                test: test.id(),
                statistic: e.value,
                stderr: e.stderr,
            });
        }
    }
    Ok(out)
}

/// `E_Q[f(S_T)] − (H/A) E_Q[log dQ/dP]`, a lower bound for `π(H, A/H, f)`.
/// Both terms come from the same paths, so the standard error is that of the
/// per-path difference.
pub fn weak_duality_bound<S: Scalar>(ensemble: &PathEnsemble<S>, a: S, spec: &PayoffSpec<S>) -> Estimate<S> {
    let c = ensemble.h() / a / S::lit(2.0);
    let v: Vec<S> = (0..ensemble.paths())
        .map(|p| spec.eval(ensemble.terminal_s(p)) - c * ensemble.kappa_sq_integral(p))
        .collect();
    Estimate::from_samples(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBoundPair<S> {
    pub m: usize,
    pub lhs: Estimate<S>,
    pub rhs: Estimate<S>,
}

impl<S: Scalar> EntropyBoundPair<S> {
    /// `lhs ≥ rhs − k·(combined stderr)`.
    pub fn holds(&self, k: S) -> bool {
        let se = (self.lhs.stderr * self.lhs.stderr + self.rhs.stderr * self.rhs.stderr).sqrt();
        self.lhs.value >= self.rhs.value - k * se
    }
}

/// Entropy against `(1/(2σ²H)) (M/(M+1)) E_Q[(S_T − s0 − σX_T)²]`. Needs
/// `T/(H/M)` integral and `H/M` a multiple of the simulation step.
pub fn entropy_lower_bound_check<S: Scalar>(
    ensemble: &PathEnsemble<S>,
    m: usize,
) -> Result<EntropyBoundPair<S>, SimError> {
    let h = ensemble.h();
    let horizon = ensemble.params().horizon();
    let step = h / S::from_usize_lossy(m.max(1));
    let is_int = |x: S| (x - x.round()).abs() <= S::lit(1e-7) * x.abs().max(S::one());
    if m == 0 || !is_int(horizon / step) {
        return Err(SimError::GridMismatch("T must be a whole number of H/M periods"));
    }
    if !is_int(step / ensemble.delta()) {
        return Err(SimError::GridMismatch("H/M must be a multiple of the simulation step"));
    }
    let sigma = ensemble.params().sigma();
    let mf = S::from_usize_lossy(m);
    let c = mf / (mf + S::one()) / (S::lit(2.0) * sigma * sigma * h);
    let v: Vec<S> = (0..ensemble.paths())
        .map(|p| {
            let d = ensemble.drift_integral(p);
            c * d * d
        })
        .collect();
    Ok(EntropyBoundPair {
        m,
        lhs: entropy_estimate(ensemble),
        rhs: Estimate::from_samples(&v),
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite sample"));
    let (na, nb) = (S::from_usize_lossy(a.len()), S::from_usize_lossy(b.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = S::zero();
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((S::from_usize_lossy(i) / na - S::from_usize_lossy(j) / nb).abs());
    }
    d
}

/// Two-sample KS critical value at level 1%: `1.63 √((n + m)/(n m))`.
pub fn ks_critical_99<S: Scalar>(n: usize, m: usize) -> S {
    let (n, m) = (S::from_usize_lossy(n), S::from_usize_lossy(m));
    S::lit(1.63) * ((n + m) / (n * m)).sqrt()
}

fn reference_value<S: Scalar>(policy: &VolatilityPolicy<S>, params: &ModelParams<S>, w: &[S]) -> S {
    let mut s = params.s0();
    for j in 0..w.len() - 1 {
        s = s + policy.level(j, &w[..j], params.sigma()) * (w[j + 1] - w[j]);
    }
    s
}

/// Independent draws of `s0 + ∫ν dW` under `P`, with `W` sampled exactly at the partition points.
pub fn reference_terminal_sample<S: Scalar>(
    policy: &VolatilityPolicy<S>,
    params: &ModelParams<S>,
    paths: usize,
    seed: u64,
) -> Vec<S> {
    let part = policy.partition();
    let root = SeededStream::new(seed, 1);
    (0..paths)
        .map(|p| {
            let mut rng = root.derive(p as u64).rng();
            let mut w = vec![S::zero()];
            for k in 1..part.len() {
                let z: f64 = rng.sample(StandardNormal);
                w.push(w[k - 1] + (part[k] - part[k - 1]).sqrt() * S::lit(z));
            }
            reference_value(policy, params, &w)
        })
        .collect()
}

/// `s0 + ∫ν dX` evaluated on each ensemble path's own `X` at the partition
/// points. Coupling the two samples through the same Brownian path removes
/// most of the Monte Carlo noise from their KS distance.
pub fn coupled_reference<S: Scalar>(ensemble: &PathEnsemble<S>) -> Vec<S> {
    let part = ensemble.policy().partition();
    let idx: Vec<usize> = part.iter().map(|&t| ensemble.record_floor(t)).collect();
    (0..ensemble.paths())
        .map(|p| {
            let w: Vec<S> = idx.iter().map(|&r| ensemble.x(p, r)).collect();
            reference_value(ensemble.policy(), ensemble.params(), &w)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport<S> {
    pub statistic: S,
    pub critical_99: S,
}

/// KS distance between the simulated `S_T` and a reference sample.
pub fn terminal_law_distance<S: Scalar>(ensemble: &PathEnsemble<S>, reference: &[S]) -> KsReport<S> {
    let st: Vec<S> = (0..ensemble.paths()).map(|p| ensemble.terminal_s(p)).collect();
    KsReport {
        statistic: ks_statistic(&st, reference),
        critical_99: ks_critical_99(st.len(), reference.len()),
    }
}

/// Everything the dual side of the pricing problem reports for one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport<S> {
    pub h: S,
    pub a: S,
    pub paths: usize,
    pub seed: u64,
    pub entropy: Estimate<S>,
    pub scaled_entropy: Estimate<S>,
    pub mean_payoff: Estimate<S>,
    pub weak_duality_bound: Estimate<S>,
    pub martingale_stats: Vec<MartingaleStat<S>>,
    pub entropy_lower_bound_pairs: Vec<EntropyBoundPair<S>>,
}

/// Entropy, weak-duality bound, default martingale tests and the entropy
/// bound for each `M` in `ms`.
pub fn dual_report<S: Scalar>(
    ensemble: &PathEnsemble<S>,
    a: S,
    spec: &PayoffSpec<S>,
    ms: &[usize],
) -> Result<DualReport<S>, SimError> {
    let payoff: Vec<S> = (0..ensemble.paths())
        .map(|p| spec.eval(ensemble.terminal_s(p)))
        .collect();
    Ok(DualReport {
        h: ensemble.h(),
        a,
        paths: ensemble.paths(),
        seed: ensemble.seed(),
        entropy: entropy_estimate(ensemble),
        scaled_entropy: scaled_entropy(ensemble),
        mean_payoff: Estimate::from_samples(&payoff),
        weak_duality_bound: weak_duality_bound(ensemble, a, spec),
        martingale_stats: relaxed_martingale_test(
            ensemble,
            &default_time_pairs(ensemble.policy()),
            &default_test_functions(),
        )?,
        entropy_lower_bound_pairs: ms
            .iter()
            .map(|&m| entropy_lower_bound_check(ensemble, m))
            .collect::<Result<_, _>>()?,
    })
}
