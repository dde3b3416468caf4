use thiserror::Error;

use crate::Scalar;

/// Default node count for Gaussian expectations.
pub const DEFAULT_NODES: usize = 64;
/// Above this the Hermite recurrence overflows in double precision.
pub const MAX_NODES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("variance must be strictly positive and finite, got {0}")]
    DegenerateVariance(f64),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("at most {MAX_NODES} nodes are supported, got {0}")]
    TooManyNodes(usize),
    #[error("Newton iteration for Hermite root {0} did not converge")]
    NoConvergence(usize),
}

/// Gauss-Hermite rule for `N(mean, variance)`: `E[g(Z)] ≈ Σ w_i g(z_i)`,
/// exact for polynomials of degree `2n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
    mean: S,
    variance: S,
}

impl<S: Scalar> QuadratureRule<S> {
    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }
    pub fn weights(&self) -> &[S] {
        &self.weights
    }
    pub fn mean(&self) -> S {
        self.mean
    }
    pub fn variance(&self) -> S {
        self.variance
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, mut g: impl FnMut(S) -> S) -> S {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(S::zero(), |acc, (&z, &w)| acc + w * g(z))
    }

    /// Same standardized rule re-targeted at another normal law.
    pub fn rescaled(&self, mean: S, variance: S) -> Result<Self, QuadratureError> {
        check_variance(variance)?;
        let ratio = (variance / self.variance).sqrt();
        Ok(Self {
            nodes: self.nodes.iter().map(|&z| mean + (z - self.mean) * ratio).collect(),
            weights: self.weights.clone(),
            mean,
            variance,
        })
    }
}

fn check_variance<S: Scalar>(variance: S) -> Result<(), QuadratureError> {
    if variance > S::zero() && variance.is_finite() {
        Ok(())
    } else {
        Err(QuadratureError::DegenerateVariance(variance.as_f64()))
    }
}

/// Builds the `n`-point Gauss-Hermite rule for `N(mean, variance)`.
///
/// Roots of the physicists' Hermite polynomial are found by Newton's method on
/// the orthonormal recurrence, seeded with the usual asymptotic guesses and
/// deflated by the roots already found. The computation runs in `f64` and is cast to `S`.
pub fn gauss_quadrature<S: Scalar>(n: usize, mean: S, variance: S) -> Result<QuadratureRule<S>, QuadratureError> {
    if n < 2 {
        return Err(QuadratureError::TooFewNodes(n));
    }
    if n > MAX_NODES {
        return Err(QuadratureError::TooManyNodes(n));
    }
    check_variance(variance)?;
    let (x, w) = hermite_roots(n)?;

    let scale = (2.0 * variance.as_f64()).sqrt();
    let total: f64 = w.iter().sum();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // hermite_roots returns descending roots; emit ascending.
    for i in (0..n).rev() {
        nodes.push(S::lit(mean.as_f64() + scale * x[i]));
        weights.push(S::lit(w[i] / total));
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        mean,
        variance,
    })
}

fn hermite_roots(n: usize) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut converged = false;
        let mut deriv = 0.0;
        for _ in 0..200 {
            let mut p1 = PI_M4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            deriv = (2.0 * nf).sqrt() * p2;
            // Maehly deflation keeps Newton away from roots already found.
            let found: f64 = x[..i].iter().map(|&r| 1.0 / (z - r) + 1.0 / (z + r)).sum();
            let step = p1 / deriv;
            let prev = z;
            z = prev - step / (1.0 - step * found);
            if i > 0 && z >= x[i - 1] {
                z = 0.5 * (prev + x[i - 1]);
            } else if i > 0 && z < 0.0 {
                z = 0.5 * prev;
            }
            if (z - prev).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(QuadratureError::NoConvergence(i));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (deriv * deriv);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(rule: &QuadratureRule<f64>, k: i32) -> f64 {
        rule.expect(|z| (z - rule.mean()).powi(k))
    }

    #[test]
    fn two_point_rule_is_plus_minus_one() {
        // Moment equations w1 + w2 = 1, w1 z1 + w2 z2 = 0, w1 z1^2 + w2 z2^2 = 1,
        // w1 z1^3 + w2 z2^3 = 0 give z = ±1, w = 1/2.
        let r = gauss_quadrature(2, 0.0_f64, 1.0).unwrap();
        assert!((r.nodes()[0] + 1.0).abs() < 1e-14);
        assert!((r.nodes()[1] - 1.0).abs() < 1e-14);
        assert!((r.weights()[0] - 0.5).abs() < 1e-14);
        assert!((r.weights()[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn moment_identities_across_sizes() {
        for &n in &[2usize, 3, 7, 12, 20, 32, 64, 128, 200] {
            for &(mean, var) in &[(0.0, 1.0), (0.3, 0.25), (-2.0, 4.0)] {
                let r = gauss_quadrature(n, mean, var).unwrap();
                let wsum: f64 = r.weights().iter().sum();
                assert!((wsum - 1.0).abs() <= 1e-12, "n={n}");
                assert!((r.expect(|z| z) - mean).abs() <= 1e-10, "n={n}");
                assert!((moment(&r, 2) - var).abs() <= 1e-8 * var, "n={n}");
                assert!(r.weights().iter().all(|&w| w > 0.0));
                assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
            }
        }
    }

    #[test]
    fn fourth_moment_of_twenty_point_rule() {
        let r = gauss_quadrature(20, 0.0_f64, 1.0).unwrap();
        assert!((r.expect(|z| z.powi(4)) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn exact_to_degree_2n_minus_1() {
        // E[Z^(2k)] = (2k-1)!! for the standard normal.
        let n = 10;
        let r = gauss_quadrature(n, 0.0_f64, 1.0).unwrap();
        let mut dfact = 1.0;
        for k in 1..n {
            dfact *= (2 * k - 1) as f64;
            let m = r.expect(|z| z.powi(2 * k as i32));
            assert!((m - dfact).abs() <= 1e-9 * dfact, "k={k}");
        }
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert_eq!(
            gauss_quadrature(8, 0.0, 0.0),
            Err(QuadratureError::DegenerateVariance(0.0))
        );
        assert_eq!(gauss_quadrature(1, 0.0, 1.0), Err(QuadratureError::TooFewNodes(1)));
        assert_eq!(gauss_quadrature(201, 0.0, 1.0), Err(QuadratureError::TooManyNodes(201)));
    }

    #[test]
    fn rescale_matches_direct_construction() {
        let a = gauss_quadrature(16, 0.0_f64, 1.0).unwrap().rescaled(1.5, 0.09).unwrap();
        let b = gauss_quadrature(16, 1.5, 0.09).unwrap();
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn single_precision_rule() {
        let r = gauss_quadrature::<f32>(12, 0.0, 2.0).unwrap();
        let m2 = r.expect(|z| z * z);
        assert!((m2 - 2.0).abs() < 1e-5);
    }
}
