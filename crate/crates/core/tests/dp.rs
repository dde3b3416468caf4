use delayed_hedge::dp::{
    backward_step, convergence_study, denominator_log, indifference_price_dp, indifference_price_dp_with,
    indifference_price_on_law, indifference_price_tree_oracle, terminal_log_value, terminal_value, Delay,
    DelayedProblem, DpConfig, DpError, StageValue, Terminal,
};
use delayed_hedge::model::{draw_normal_increments, ModelParams, PayoffSpec, SeededStream};
use delayed_hedge::optimize::{golden_section, linspace};

fn fly() -> PayoffSpec<f64> {
    PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap()
}

fn two_plateau() -> PayoffSpec<f64> {
    PayoffSpec::new(
        vec![-2.0, -1.5, -0.5, 0.5, 1.0, 1.5],
        vec![0.0, 1.0, 1.0, 0.4, 0.4, 0.0],
    )
    .unwrap()
}

#[test]
fn zero_and_constant_payoffs() {
    for params in [
        ModelParams::<f64>::standard(),
        ModelParams::<f64>::new(0.3, 0.7, 0.25, 2.0).unwrap(),
    ] {
        for n in [2usize, 3, 8] {
            let zero = DelayedProblem::scaled(params, PayoffSpec::constant(0.0).unwrap(), n, 1.5).unwrap();
            let r = indifference_price_dp(&zero).unwrap();
            assert!(r.price.abs() <= 1e-6, "n={n}: {}", r.price);
            let c = DelayedProblem::scaled(params, PayoffSpec::constant(0.8).unwrap(), n, 1.5).unwrap();
            let r = indifference_price_dp(&c).unwrap();
            assert!((r.price - 0.8).abs() <= 1e-6, "n={n}: {}", r.price);
        }
    }
}

#[test]
fn tree_oracle_matches_lattice_dp() {
    let params = ModelParams::<f64>::standard();
    for (n, spec) in [(3usize, fly()), (2, fly()), (3, two_plateau())] {
        let problem = DelayedProblem::scaled(params, spec, n, 1.0).unwrap();
        let law = problem.discrete_law(3).unwrap();
        let dp = indifference_price_on_law(&problem, &law, &DpConfig::default()).unwrap();
        let tree = indifference_price_tree_oracle(&problem, 3).unwrap();
        assert!(
            (dp.price - tree.price).abs() <= 1e-6,
            "n={n}: {} vs {}",
            dp.price,
            tree.price
        );
    }
}

#[test]
fn tree_oracle_limits() {
    let problem = DelayedProblem::scaled(ModelParams::<f64>::standard(), fly(), 4, 1.0).unwrap();
    assert_eq!(
        indifference_price_tree_oracle(&problem, 3).unwrap_err(),
        DpError::TreeTooDeep(4)
    );
    let sub = DelayedProblem::scaled(ModelParams::<f64>::standard(), fly(), 3, 1.0)
        .unwrap()
        .with_substeps(2)
        .unwrap();
    assert!(matches!(
        indifference_price_tree_oracle(&sub, 3),
        Err(DpError::Unsupported(_))
    ));
}

/// Simpson's rule for `E[g(U)]`, `U ~ N(mean, var)`, over `mean ± 12 sd`.
fn gaussian_expect(mean: f64, var: f64, g: impl Fn(f64) -> f64) -> f64 {
    let sd = var.sqrt();
    let n = 24_000;
    let h = 24.0 * sd / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let u = mean - 12.0 * sd + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let z = (u - mean) / sd;
        acc += w * g(u) * (-0.5 * z * z).exp();
    }
    acc * h / 3.0 / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn two_periods_against_direct_minimization() {
    // Both positions are deterministic for N = 2. With U = Z1 + Z2 and
    // D = Z1 − Z2 independent, the objective splits into a D-moment
    // generating function and a one-dimensional integral over U.
    let params = ModelParams::<f64>::new(0.2, 1.0, 0.2, 1.0).unwrap();
    let spec = two_plateau();
    let problem = DelayedProblem::scaled(params, spec.clone(), 2, 1.0).unwrap();
    let lam = problem.lambda();
    let (m, v) = (params.mu() * problem.delta(), params.sigma().powi(2) * problem.delta());
    let obj = |g1: f64, g2: f64| {
        let (a, b) = ((g1 + g2) / 2.0, (g1 - g2) / 2.0);
        let d_part = lam * lam * b * b * 2.0 * v / 2.0;
        let u_part = gaussian_expect(2.0 * m, 2.0 * v, |u| (-lam * a * u + lam * spec.eval(0.2 + u)).exp());
        d_part + u_part.ln()
    };
    let inner = |g1: f64| golden_section(|g2| obj(g1, g2), -4.0, 4.0, 1e-9).value;
    let num = golden_section(inner, -4.0, 4.0, 1e-9).value;
    let direct = (num - denominator_log(&params)) / lam;
    let dp = indifference_price_dp(&problem).unwrap().price;
    assert!((dp - direct).abs() <= 1e-6, "{dp} vs {direct}");
}

#[test]
fn delay_and_coarse_trading_raise_the_price() {
    let params = ModelParams::<f64>::standard();
    for n in [4usize, 8] {
        let problem = DelayedProblem::scaled(params, fly(), n, 1.0).unwrap();
        let delayed = indifference_price_dp(&problem).unwrap().price;
        let cfg = DpConfig {
            delay: Delay::None,
            ..DpConfig::default()
        };
        let free = indifference_price_dp_with(&problem, &cfg).unwrap().price;
        assert!(delayed >= free - 1e-9, "n={n}: {delayed} < {free}");
        let mut last = delayed;
        for k in [2usize, 4] {
            let p = indifference_price_dp(&problem.clone().with_substeps(k).unwrap())
                .unwrap()
                .price;
            assert!(p <= last + 1e-9, "n={n} k={k}: {p} > {last}");
            last = p;
        }
    }
}

#[test]
fn prices_within_trivial_bounds() {
    let params = ModelParams::<f64>::standard();
    for spec in [fly(), two_plateau(), PayoffSpec::capped_call(0.0, 1.0).unwrap()] {
        for a in [0.5, 2.0] {
            let problem = DelayedProblem::scaled(params, spec.clone(), 6, a).unwrap();
            let p = indifference_price_dp(&problem).unwrap().price;
            assert!(p >= -1e-9 && p <= spec.sup() + 1e-9, "{p}");
        }
    }
}

#[test]
fn grid_refinement_is_small() {
    let params = ModelParams::<f64>::standard();
    for n in [8usize, 16] {
        let problem = DelayedProblem::scaled(params, fly(), n, 1.0).unwrap();
        let base = indifference_price_dp(&problem).unwrap().price;
        let fine = indifference_price_dp_with(&problem, &DpConfig::default().refined())
            .unwrap()
            .price;
        assert!((base - fine).abs() <= 1e-3, "n={n}: {base} vs {fine}");
    }
}

#[test]
fn backward_step_matches_dense_position_scan() {
    let params = ModelParams::<f64>::new(0.0, 1.0, 0.1, 1.0).unwrap();
    let problem = DelayedProblem::scaled(params, fly(), 4, 1.0).unwrap();
    let law = problem.gaussian_law(24).unwrap();
    let term = Terminal::new(&problem, &law);
    let s_nodes = linspace(-2.0, 2.0, 5);
    let c_grid = linspace(-2.0, 2.0, 9);
    let table = backward_step(&term, &problem, &law, &s_nodes, &c_grid).unwrap();
    assert_eq!(table.stage(), 4);
    let dense = linspace(-2.0, 2.0, 2001);
    for (i, &s) in s_nodes.iter().enumerate().step_by(2) {
        for (k, &g) in c_grid.iter().enumerate().step_by(4) {
            let oracle = dense_scan(&term, &problem, &law, &dense, s, g);
            let got = table.log_values()[i * c_grid.len() + k];
            assert!((got - oracle).abs() <= 1e-8, "({s}, {g}): {got} vs {oracle}");
        }
    }
}

fn dense_scan(
    next: &dyn StageValue<f64>,
    problem: &DelayedProblem<f64>,
    law: &delayed_hedge::dp::IncrementLaw<f64>,
    dense: &[f64],
    s: f64,
    g: f64,
) -> f64 {
    let (mut pts, mut lw) = (Vec::new(), Vec::new());
    let factor = law.tilted(problem.lambda(), g, &mut pts, &mut lw);
    let obj = |c: f64| delayed_hedge::log_sum_exp(pts.iter().zip(&lw).map(|(&z, &w)| w + next.log_value(s + z, c)));
    // coarse scan, then a second scan with 1000 times finer spacing around the best point
    let best = dense
        .iter()
        .copied()
        .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
        .unwrap();
    let h = dense[1] - dense[0];
    let fine = linspace(
        (best - 2.0 * h).max(dense[0]),
        (best + 2.0 * h).min(dense[dense.len() - 1]),
        4001,
    );
    factor + fine.iter().map(|&c| obj(c)).fold(f64::INFINITY, f64::min)
}

#[test]
fn terminal_value_against_monte_carlo() {
    let params = ModelParams::<f64>::new(0.1, 1.2, 0.3, 1.0).unwrap();
    let problem = DelayedProblem::scaled(params, two_plateau(), 4, 1.0).unwrap();
    let law = problem.gaussian_law(16).unwrap();
    let (m, v) = (params.mu() * problem.delta(), params.sigma().powi(2) * problem.delta());
    let n = 400_000;
    let z = draw_normal_increments(SeededStream::new(11, 0), n, m, v);
    let lam = problem.lambda();
    for (s, g) in [(0.0, 0.0), (-0.7, 0.4), (1.1, -0.3)] {
        let xs: Vec<f64> = z
            .iter()
            .map(|&zi| (-lam * (g * zi - problem.spec().eval(s + zi))).exp())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let exact = terminal_value(s, g, &problem, &law).unwrap();
        assert!(
            (exact - mean).abs() <= 4.0 * sd / (n as f64).sqrt(),
            "({s},{g}): {exact} vs {mean}"
        );
    }
}

#[test]
fn terminal_overflow_guard() {
    let problem = DelayedProblem::new(ModelParams::<f64>::standard(), fly(), 4, 400.0).unwrap();
    let law = problem.gaussian_law(16).unwrap();
    assert!(terminal_log_value(0.0, 5.0, &problem, &law).is_finite());
    assert!(matches!(
        terminal_value(0.0, 5.0, &problem, &law),
        Err(DpError::OverflowGuard { stage: 5, .. })
    ));
}

#[test]
fn zero_payoff_stage_values_are_position_costs() {
    // With f ≡ 0, log V_N(s, g) = L(g) + min_c L(c) with
    // L(c) = log E[exp(−λcZ)] = −λcμΔ + λ²c²σ²Δ/2 and min_c L(c) = −μ²Δ/(2σ²).
    let params = ModelParams::<f64>::new(0.0, 0.9, 0.2, 1.0).unwrap();
    let problem = DelayedProblem::scaled(params, PayoffSpec::constant(0.0).unwrap(), 4, 1.0).unwrap();
    let law = problem.gaussian_law(16).unwrap();
    let term = Terminal::new(&problem, &law);
    let s_nodes = linspace(-3.0, 3.0, 7);
    let c_grid = linspace(-1.0, 1.0, 11);
    let table = backward_step(&term, &problem, &law, &s_nodes, &c_grid).unwrap();
    let (lam, d) = (problem.lambda(), problem.delta());
    for i in 0..s_nodes.len() {
        for (k, &g) in c_grid.iter().enumerate() {
            let t = lam * g;
            let expect = -t * params.mu() * d + t * t * params.sigma().powi(2) * d / 2.0
                - params.mu().powi(2) * d / (2.0 * params.sigma().powi(2));
            let got = table.log_values()[i * c_grid.len() + k];
            assert!((got - expect).abs() <= 1e-9, "{got} vs {expect}");
        }
    }
}

#[test]
fn convergence_study_of_constant_payoff_has_no_gap() {
    let rows = convergence_study(
        1.0,
        &PayoffSpec::constant(0.5).unwrap(),
        &ModelParams::<f64>::standard(),
        &[4, 8],
        2,
        &DpConfig::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.gap.abs() <= 1e-6, "{r:?}");
        assert_eq!(r.lambda, r.n as f64);
    }
}
