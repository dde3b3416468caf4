//! One-dimensional interpolants used by the value tables.

use crate::Scalar;

/// Fritsch-Butland derivative at an interior node from the neighbouring
/// spacings and secant slopes.
fn interior_slope<S: Scalar>(h0: S, h1: S, d0: S, d1: S) -> S {
    if d0 * d1 <= S::zero() {
        return S::zero();
    }
    let two = S::lit(2.0);
    let w1 = two * h1 + h0;
    let w2 = h1 + two * h0;
    (w1 + w2) / (w1 / d0 + w2 / d1)
}

/// Three-point end derivative, limited so the end segment stays monotone.
fn end_slope<S: Scalar>(h0: S, h1: S, d0: S, d1: S) -> S {
    let two = S::lit(2.0);
    let d = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        S::zero()
    } else if d0.signum() != d1.signum() && d.abs() > S::lit(3.0) * d0.abs() {
        S::lit(3.0) * d0
    } else {
        d
    }
}

fn hermite<S: Scalar>(x0: S, h: S, y0: S, y1: S, m0: S, m1: S, x: S) -> S {
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let h00 = two * t3 - three * t2 + S::one();
    let h10 = t3 - two * t2 + t;
    let h01 = three * t2 - two * t3;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

/// Monotone piecewise-cubic (PCHIP) interpolant, constant beyond the end nodes.
#[derive(Debug, Clone)]
pub struct Pchip<S> {
    xs: Vec<S>,
    ys: Vec<S>,
    ds: Vec<S>,
}

impl<S: Scalar> Pchip<S> {
    /// `xs` strictly increasing and at least one node.
    pub fn new(xs: Vec<S>, ys: Vec<S>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(!xs.is_empty());
        let n = xs.len();
        let mut ds = vec![S::zero(); n];
        if n == 2 {
            let d = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            ds = vec![d, d];
        } else if n > 2 {
            let h: Vec<S> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let del: Vec<S> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
            for k in 1..n - 1 {
                ds[k] = interior_slope(h[k - 1], h[k], del[k - 1], del[k]);
            }
            ds[0] = end_slope(h[0], h[1], del[0], del[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Self { xs, ys, ds }
    }

    pub fn xs(&self) -> &[S] {
        &self.xs
    }
    pub fn ys(&self) -> &[S] {
        &self.ys
    }
    pub fn lo(&self) -> S {
        self.xs[0]
    }
    pub fn hi(&self) -> S {
        self.xs[self.xs.len() - 1]
    }

    pub fn eval(&self, x: S) -> S {
        let n = self.xs.len();
        if x <= self.xs[0] || n == 1 {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&b| b <= x) - 1;
        hermite(
            self.xs[i],
            self.xs[i + 1] - self.xs[i],
            self.ys[i],
            self.ys[i + 1],
            self.ds[i],
            self.ds[i + 1],
            x,
        )
    }
}

/// PCHIP value at `x` computed only from the (up to) four nodes around the
/// bracketing cell, with values supplied lazily by `y(i)`. Agrees with
/// [`Pchip::eval`] on the same data.
pub fn pchip_local<S: Scalar>(xs: &[S], mut y: impl FnMut(usize) -> S, x: S) -> S {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return y(0);
    }
    if x >= xs[n - 1] {
        return y(n - 1);
    }
    let i = xs.partition_point(|&b| b <= x) - 1;
    if n == 2 {
        let (y0, y1) = (y(0), y(1));
        return y0 + (y1 - y0) * (x - xs[0]) / (xs[1] - xs[0]);
    }
    let lo = i.saturating_sub(1);
    let hi = (i + 2).min(n - 1);
    let mut v = [S::zero(); 4];
    for (k, j) in (lo..=hi).enumerate() {
        v[k] = y(j);
    }
    let val = |j: usize| v[j - lo];
    let h = |j: usize| xs[j + 1] - xs[j];
    let del = |j: usize| (val(j + 1) - val(j)) / h(j);
    let slope = |k: usize| -> S {
        if k == 0 {
            end_slope(h(0), h(1), del(0), del(1))
        } else if k == n - 1 {
            end_slope(h(n - 2), h(n - 3), del(n - 2), del(n - 3))
        } else {
            interior_slope(h(k - 1), h(k), del(k - 1), del(k))
        }
    };
    hermite(xs[i], h(i), val(i), val(i + 1), slope(i), slope(i + 1), x)
}

/// Cubic Hermite interpolation on a uniform grid with centred-difference
/// derivatives (one-sided at the ends). Clamps `x` to the grid.
pub fn cubic_uniform<S: Scalar>(x0: S, h: S, ys: &[S], x: S) -> S {
    let n = ys.len();
    if n == 1 {
        return ys[0];
    }
    let pos = ((x - x0) / h).max(S::zero());
    let i = pos.floor().to_usize().unwrap_or(0).min(n - 2);
    let slope = |k: usize| -> S {
        if k == 0 {
            (ys[1] - ys[0]) / h
        } else if k == n - 1 {
            (ys[n - 1] - ys[n - 2]) / h
        } else {
            (ys[k + 1] - ys[k - 1]) / (S::lit(2.0) * h)
        }
    };
    let xi = x0 + h * S::from_usize_lossy(i);
    let xc = x.max(x0).min(x0 + h * S::from_usize_lossy(n - 1));
    hermite(xi, h, ys[i], ys[i + 1], slope(i), slope(i + 1), xc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_nodes_and_lines() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let p = Pchip::new(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(p.eval(*x), *y);
        }
        assert!((p.eval(1.3) - 1.6).abs() < 1e-14);
        assert_eq!(p.eval(-5.0), -1.0);
        assert_eq!(p.eval(50.0), 5.0);
    }

    #[test]
    fn pchip_is_monotone_on_monotone_data() {
        let xs = vec![0.0_f64, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.0, 1.0, 1.0, 5.0];
        let p = Pchip::new(xs, ys);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn local_matches_global() {
        let xs: Vec<f64> = (0..9).map(|i| (i as f64).powf(1.3)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.7).sin() + 0.1 * x).collect();
        let p = Pchip::new(xs.clone(), ys.clone());
        for k in 0..=500 {
            let x = -0.5 + 18.0 * k as f64 / 500.0;
            let a = p.eval(x);
            let b = pchip_local(&xs, |i| ys[i], x);
            assert!((a - b).abs() < 1e-14, "{x}: {a} vs {b}");
        }
        let short = [0.0_f64, 1.0, 2.0];
        let sy = [1.0_f64, 3.0, 2.0];
        let q = Pchip::new(short.to_vec(), sy.to_vec());
        for x in [0.2, 0.9, 1.5, 1.99] {
            assert!((q.eval(x) - pchip_local(&short, |i| sy[i], x)).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_is_exact_for_quadratics_inside() {
        let h = 0.25;
        let ys: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(2)).collect();
        for k in 4..=30 {
            let x = 0.25 + k as f64 * 0.05;
            if x > 2.25 {
                break;
            }
            assert!((cubic_uniform(0.0, h, &ys, x) - x * x).abs() < 1e-13);
        }
        assert_eq!(cubic_uniform(0.0, h, &ys, 1.0), 1.0);
    }
}
