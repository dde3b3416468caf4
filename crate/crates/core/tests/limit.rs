use delayed_hedge::envelope::{certifies_superhedge, superrep_price};
use delayed_hedge::limit::{limit_value, limit_value_bruteforce, limit_value_exact, LimitProblem};
use delayed_hedge::model::{ModelParams, PayoffSpec};
use proptest::prelude::*;

fn payoff() -> impl Strategy<Value = PayoffSpec<f64>> {
    (2usize..6)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.2..1.5_f64, k - 1),
                prop::collection::vec(0.0..1.0_f64, k),
            )
        })
        .prop_map(|(gaps, values)| {
            let mut x = vec![-1.5];
            for g in gaps {
                x.push(x[x.len() - 1] + g);
            }
            PayoffSpec::new(x, values).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_is_sup_with_flat_hedge(f in payoff(), s0 in -3.0..3.0_f64) {
        let params = ModelParams::standard().with_s0(s0);
        let h = superrep_price(&f, &params).unwrap();
        prop_assert_eq!(h.price, f.sup());
        prop_assert_eq!(h.hedge_slope, 0.0);
        prop_assert!(certifies_superhedge(&f, &h, s0, 1e-12));
    }

    #[test]
    fn limit_value_sits_between_bachelier_and_sup(f in payoff(), a in 0.05..20.0_f64) {
        let p = LimitProblem::new(a, ModelParams::standard(), f.clone(), 32).unwrap();
        let sol = limit_value(&p).unwrap();
        prop_assert!(sol.value >= p.bachelier_value() - 1e-10);
        prop_assert!(sol.value <= f.sup() + 1e-12);
        prop_assert!(sol.constraint_residual <= 1e-8);
        let more = limit_value(&LimitProblem::new(2.0 * a, ModelParams::standard(), f, 32).unwrap()).unwrap();
        prop_assert!(more.value >= sol.value - 1e-10);
    }

    #[test]
    fn structured_solver_matches_brute_force(f in payoff(), a in 0.2..10.0_f64) {
        let p = LimitProblem::new(a, ModelParams::standard(), f, 8).unwrap();
        let v = limit_value(&p).unwrap().value;
        let b = limit_value_bruteforce(&p, 1500, 1501).unwrap().value;
        prop_assert!((v - b).abs() <= 1e-3, "{} vs {}", v, b);
    }
}

#[test]
fn quadrature_solver_approaches_the_gaussian_value() {
    let fly = PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap();
    let capped = PayoffSpec::capped_call(-0.5, 0.5).unwrap();
    for f in [fly, capped] {
        for a in [0.5, 2.0] {
            let params = ModelParams::<f64>::new(0.2, 1.3, 0.0, 0.8).unwrap();
            let exact = limit_value_exact(&LimitProblem::new(a, params, f.clone(), 64).unwrap()).value;
            // the argmax profile has kinks, so the error oscillates in the
            // node count instead of decaying geometrically
            let err: Vec<f64> = [64, 200]
                .iter()
                .map(|&n| {
                    (limit_value(&LimitProblem::new(a, params, f.clone(), n).unwrap())
                        .unwrap()
                        .value
                        - exact)
                        .abs()
                })
                .collect();
            assert!(err[0] <= 5e-3 && err[1] <= 2.5e-3, "{err:?}");
        }
    }
}

#[test]
fn butterfly_limit_at_unit_risk_aversion() {
    let p = LimitProblem::new(
        1.0_f64,
        ModelParams::standard(),
        PayoffSpec::butterfly(0.0, 1.0, 1.0).unwrap(),
        64,
    )
    .unwrap();
    let sol = limit_value(&p).unwrap();
    // symmetric payoff, symmetric law: no multiplier
    assert!(sol.multiplier.abs() < 1e-8);
    assert!((sol.value - limit_value_exact(&p).value).abs() < 1e-3);
}
