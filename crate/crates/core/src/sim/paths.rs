use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{SimError, VolatilityPolicy};
use crate::model::{ModelParams, SeededStream};
use crate::{pairwise_sum, Scalar};

/// Fewest paths [`simulate_paths`] accepts.
pub const MIN_PATHS: usize = 1000;

/// `(−1) ∨ z ∧ 1`.
#[inline]
pub fn clamp_unit<S: Scalar>(z: S) -> S {
    z.max(-S::one()).min(S::one())
}

/// Knobs beyond the construction itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions<S> {
    /// Added to the clamp in the drift. Zero is the construction; a nonzero
    /// offset breaks the relaxed martingale property and serves as a
    /// negative control.
    pub clamp_offset: S,
    /// Upper bound on the number of stored time points per path.
    pub max_records: usize,
}

impl<S: Scalar> Default for SimOptions<S> {
    fn default() -> Self {
        Self {
            clamp_offset: S::zero(),
            max_records: 128,
        }
    }
}

/// Value at time `t` of a path sampled every `delta` from 0, by linear interpolation.
fn path_at<S: Scalar>(path: &[S], delta: S, t: S) -> S {
    let u = (t / delta).max(S::zero());
    let i = u.floor().as_f64() as usize;
    if i + 1 >= path.len() {
        return path[path.len() - 1];
    }
    let w = u - S::from_usize_lossy(i);
    path[i] + w * (path[i + 1] - path[i])
}

/// Observations `(x_{t_0}, …, x_{t_{j−1}})` feeding `f_j`.
fn observed<S: Scalar>(path: &[S], delta: S, policy: &VolatilityPolicy<S>, j: usize) -> Vec<S> {
    policy.partition()[..j]
        .iter()
        .map(|&t| path_at(path, delta, t))
        .collect()
}

/// `μ − σκ_t` on interval `j` given the level `f_j`: zero before `t_1`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn drift_gap<S: Scalar>(
    path: &[S],
    delta: S,
    t: S,
    j: usize,
    level: S,
    policy: &VolatilityPolicy<S>,
    h: S,
    sigma: S,
    offset: S,
) -> S {
    if j == 0 {
        return S::zero();
    }
    let lag = (t - h).max(policy.partition()[j]);
    let z = path_at(path, delta, t) - path_at(path, delta, lag);
    (level - sigma) / h * (clamp_unit(z) + offset)
}

/// The drift coefficient
/// `κ_t = (μ − 1_{[t_j, t_{j+1})}(t) (f_j − σ)/H · Φ(x_t − x_{(t−H)∨t_j})) / σ`
/// for a path `x` sampled every `delta` from time 0. Off-grid values are
/// linearly interpolated; `Φ` is the unit clamp.
pub fn drift_kappa<S: Scalar>(
    path: &[S],
    delta: S,
    t: S,
    policy: &VolatilityPolicy<S>,
    h: S,
    params: &ModelParams<S>,
) -> S {
    let j = policy.interval(t);
    // on the last interval the indicator is [t_j, T)
    let active = j > 0 && t < policy.horizon();
    let level = policy.level(j, &observed(path, delta, policy, j), params.sigma());
    let gap = if active {
        drift_gap(path, delta, t, j, level, policy, h, params.sigma(), S::zero())
    } else {
        S::zero()
    };
    (params.mu() - gap) / params.sigma()
}

/// Paths of the Brownian motion `X` under the relaxed measure, the price
/// `S_t = s0 + σX_t + ∫_0^t (μ − σκ_u) du` and `∫_0^T κ_u² du`.
///
/// `X` and `S` are stored on a subset of the simulation grid (see
/// [`PathEnsemble::record_times`]); terminal values are always stored.
#[derive(Debug, Clone)]
pub struct PathEnsemble<S> {
    params: ModelParams<S>,
    policy: VolatilityPolicy<S>,
    h: S,
    delta: S,
    steps: usize,
    seed: u64,
    clamp_offset: S,
    record_steps: Vec<usize>,
    x: Vec<S>,
    s: Vec<S>,
    kappa_sq: Vec<S>,
}

/// Simulates `paths` paths at step `delta` (rounded down to divide `T`).
pub fn simulate_paths<S: Scalar>(
    policy: &VolatilityPolicy<S>,
    h: S,
    params: &ModelParams<S>,
    delta: S,
    paths: usize,
    seed: u64,
) -> Result<PathEnsemble<S>, SimError> {
    simulate_paths_with(policy, h, params, delta, paths, seed, &SimOptions::default())
}

pub fn simulate_paths_with<S: Scalar>(
    policy: &VolatilityPolicy<S>,
    h: S,
    params: &ModelParams<S>,
    delta: S,
    paths: usize,
    seed: u64,
    options: &SimOptions<S>,
) -> Result<PathEnsemble<S>, SimError> {
    let horizon = params.horizon();
    if !(h > S::zero() && h.is_finite()) {
        return Err(SimError::NonPositiveDelay(h.as_f64()));
    }
    if !(delta > S::zero() && delta <= h / S::lit(10.0)) {
        return Err(SimError::ResolutionTooCoarse {
            delta: delta.as_f64(),
            h: h.as_f64(),
        });
    }
    if paths < MIN_PATHS {
        return Err(SimError::TooFewPaths(paths));
    }
    if (policy.horizon() - horizon).abs() > S::lit(1e-12) * horizon {
        return Err(SimError::HorizonMismatch {
            policy: policy.horizon().as_f64(),
            params: horizon.as_f64(),
        });
    }
    let part = policy.partition();
    for j in 2..part.len() {
        if part[j - 1] > (part[j] - h).max(S::zero()) + S::lit(1e-12) {
            return Err(SimError::DelayWindow {
                index: j,
                h: h.as_f64(),
            });
        }
    }

    let steps = ((horizon / delta) - S::lit(1e-9)).ceil().as_f64() as usize;
    let delta = horizon / S::from_usize_lossy(steps);
    // stored times: a regular subgrid plus the partition points
    let every = steps.div_ceil(options.max_records.max(1)).max(1);
    let mut record_steps: Vec<usize> = (0..=steps).step_by(every).collect();
    record_steps.extend(
        part.iter()
            .map(|&t| ((t / delta) + S::lit(1e-9)).floor().as_f64() as usize)
            .map(|i| i.min(steps)),
    );
    record_steps.push(steps);
    record_steps.sort_unstable();
    record_steps.dedup();
    let times: Vec<S> = (0..=steps).map(|i| S::from_usize_lossy(i) * delta).collect();
    // interval of each step, taken at its midpoint
    let seg: Vec<usize> = (0..steps)
        .map(|i| policy.interval((times[i] + times[i + 1]) / S::lit(2.0)))
        .collect();

    let root = SeededStream::new(seed, 0);
    let (sigma, mu, s0) = (params.sigma(), params.mu(), params.s0());
    let sd = delta.sqrt();
    let half_dt = delta / S::lit(2.0);
    let offset = options.clamp_offset;
    let rows: Vec<(Vec<S>, Vec<S>, S)> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = root.derive(p as u64).rng();
            let mut x = Vec::with_capacity(steps + 1);
            x.push(S::zero());
            for i in 0..steps {
                let z: f64 = rng.sample(StandardNormal);
                x.push(x[i] + sd * S::lit(z));
            }
            let levels: Vec<S> = (0..part.len() - 1)
                .map(|j| policy.level(j, &observed(&x, delta, policy, j), sigma))
                .collect();
            let mut integral = S::zero();
            let mut ksq = S::zero();
            let mut xr = Vec::with_capacity(record_steps.len());
            let mut sr = Vec::with_capacity(record_steps.len());
            let mut next = 0;
            for i in 0..=steps {
                if record_steps[next] == i {
                    xr.push(x[i]);
                    sr.push(s0 + sigma * x[i] + integral);
                    next += 1;
                }
                if i == steps {
                    break;
                }
                let j = seg[i];
                let g0 = drift_gap(&x, delta, times[i], j, levels[j], policy, h, sigma, offset);
                let g1 = drift_gap(&x, delta, times[i + 1], j, levels[j], policy, h, sigma, offset);
                let (k0, k1) = ((mu - g0) / sigma, (mu - g1) / sigma);
                integral = integral + half_dt * ((mu - sigma * k0) + (mu - sigma * k1));
                ksq = ksq + half_dt * (k0 * k0 + k1 * k1);
            }
            (xr, sr, ksq)
        })
        .collect();

    let r = record_steps.len();
    let mut x = Vec::with_capacity(paths * r);
    let mut s = Vec::with_capacity(paths * r);
    let mut kappa_sq = Vec::with_capacity(paths);
    for (xr, sr, k) in rows {
        x.extend(xr);
        s.extend(sr);
        kappa_sq.push(k);
    }
    Ok(PathEnsemble {
        params: *params,
        policy: policy.clone(),
        h,
        delta,
        steps,
        seed,
        clamp_offset: offset,
        record_steps,
        x,
        s,
        kappa_sq,
    })
}

impl<S: Scalar> PathEnsemble<S> {
    pub fn params(&self) -> &ModelParams<S> {
        &self.params
    }
    pub fn policy(&self) -> &VolatilityPolicy<S> {
        &self.policy
    }
    /// Delay `H_n`.
    pub fn h(&self) -> S {
        self.h
    }
    /// Simulation step `δ`.
    pub fn delta(&self) -> S {
        self.delta
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn clamp_offset(&self) -> S {
        self.clamp_offset
    }
    pub fn paths(&self) -> usize {
        self.kappa_sq.len()
    }
    pub fn records(&self) -> usize {
        self.record_steps.len()
    }
    pub fn record_times(&self) -> Vec<S> {
        self.record_steps
            .iter()
            .map(|&i| S::from_usize_lossy(i) * self.delta)
            .collect()
    }
    /// Index of the last stored time not after `t`.
    pub fn record_floor(&self, t: S) -> usize {
        let step = ((t / self.delta) + S::lit(1e-9)).floor().max(S::zero()).as_f64() as usize;
        self.record_steps.partition_point(|&i| i <= step).max(1) - 1
    }
    pub fn record_time(&self, r: usize) -> S {
        S::from_usize_lossy(self.record_steps[r]) * self.delta
    }
    pub fn x(&self, path: usize, r: usize) -> S {
        self.x[path * self.records() + r]
    }
    pub fn s(&self, path: usize, r: usize) -> S {
        self.s[path * self.records() + r]
    }
    pub fn terminal_x(&self, path: usize) -> S {
        self.x(path, self.records() - 1)
    }
    pub fn terminal_s(&self, path: usize) -> S {
        self.s(path, self.records() - 1)
    }
    /// `∫_0^T κ_u² du` on one path.
    pub fn kappa_sq_integral(&self, path: usize) -> S {
        self.kappa_sq[path]
    }
    /// `S_T − s0 − σX_T = ∫_0^T (μ − σκ_u) du`.
    pub fn drift_integral(&self, path: usize) -> S {
        self.terminal_s(path) - self.params.s0() - self.params.sigma() * self.terminal_x(path)
    }
    /// Sample mean and variance of the stored `X` increments, each divided by
    /// its time span so that both should be close to `(0, 1)` after
    /// multiplying the mean by the span's square root.
    pub fn standardized_increment_moments(&self) -> (S, S) {
        let r = self.records();
        let mut zs = Vec::with_capacity(self.paths() * (r - 1));
        for p in 0..self.paths() {
            for k in 1..r {
                let span = self.record_time(k) - self.record_time(k - 1);
                zs.push((self.x(p, k) - self.x(p, k - 1)) / span.sqrt());
            }
        }
        let n = S::from_usize_lossy(zs.len());
        let mean = pairwise_sum(&zs) / n;
        let sq: Vec<S> = zs.iter().map(|z| (*z - mean) * (*z - mean)).collect();
        (mean, pairwise_sum(&sq) / (n - S::one()))
    }
}
