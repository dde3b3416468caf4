//! One-dimensional search helpers shared by the solvers.

use crate::Scalar;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<S> {
    pub x: S,
    pub value: S,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol`. Unimodality is not
/// assumed: the best point ever evaluated (endpoints included) is returned.
pub fn golden_section<S: Scalar>(mut f: impl FnMut(S) -> S, a: S, b: S, tol: S) -> Minimum<S> {
    let ratio = S::lit(INV_PHI);
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut best = Minimum { x: lo, value: f(lo) };
    let fb = f(hi);
    if fb < best.value {
        best = Minimum { x: hi, value: fb };
    }
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best.value {
                best = Minimum { x, value: v };
            }
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}

/// Coarse scan of `f` over `grid`, then golden-section refinement on the
/// cell pair around the best grid point.
pub fn scan_then_golden<S: Scalar>(mut f: impl FnMut(S) -> S, grid: &[S], tol: S) -> Minimum<S> {
    assert!(!grid.is_empty(), "scan grid must be non-empty");
    let mut best_i = 0;
    let mut best_v = S::infinity();
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let refined = golden_section(&mut f, lo, hi, tol);
    if refined.value < best_v {
        refined
    } else {
        Minimum {
            x: grid[best_i],
            value: best_v,
        }
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace<S: Scalar>(lo: S, hi: S, n: usize) -> Vec<S> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / S::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + step * S::from_usize_lossy(i)
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let m = golden_section(|x: f64| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-10);
        assert!((m.x - 0.3).abs() < 1e-8);
        assert!((m.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_returns_endpoint_for_monotone() {
        let m = golden_section(|x: f64| x, 1.0, 2.0, 1e-10);
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn scan_handles_two_wells() {
        // global minimum at 2.0, local at -1.0
        let f = |x: f64| ((x + 1.0).powi(2) + 0.5).min((x - 2.0).powi(2));
        let grid = linspace(-4.0, 4.0, 41);
        let m = scan_then_golden(f, &grid, 1e-12);
        assert!((m.x - 2.0).abs() < 1e-6);
    }

    #[test]
    fn linspace_endpoints_exact() {
        let v = linspace(-1.0_f64, 3.0, 5);
        assert_eq!(v, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
    }
}
