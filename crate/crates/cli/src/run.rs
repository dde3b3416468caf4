//! Runs one resolved experiment into in-memory artifacts and checks.

use std::path::PathBuf;

use delayed_hedge::dp::{convergence_csv, indifference_price_dp, ConvergenceRow, DelayedProblem};
use delayed_hedge::envelope::{envelope_at, superrep_price};
use delayed_hedge::limit::{limit_value, LimitProblem};
use delayed_hedge::model::{PayoffSpec, DEFAULT_NODES};
use delayed_hedge::sim::{dual_report, martingale_csv, simulate_paths};
use delayed_hedge::{Params, Payoff};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::acceptance::{acceptance_suite, table_csv};
use crate::config::{CheckSpec, Experiment, ExperimentConfig, Kind};
use crate::io::{write_artifacts, Artifact};
use crate::RunError;

/// Moments of the entropy bound reported by `dual-sim`.
pub const DUAL_SIM_MS: [usize; 3] = [1, 2, 5];

/// One named tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Result of an experiment before anything touches the disk. The first
/// artifact is the one printed when no output directory is given.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: Kind,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Headline numbers for the summary line.
    pub headline: Map<String, Value>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    /// One-line JSON: kind, status, failing checks, headline numbers and
    /// the written files.
    pub fn summary(&self, written: &[PathBuf]) -> String {
        let mut m = Map::new();
        m.insert("kind".into(), json!(self.kind.to_string()));
        m.insert("status".into(), json!(if self.passed() { "pass" } else { "fail" }));
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        m.insert("failed".into(), json!(failed));
        m.insert("checks".into(), json!(self.checks.len()));
        m.extend(self.headline.clone());
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        m.insert("artifacts".into(), json!(files));
        Value::Object(m).to_string()
    }
}

/// Resolves the config, runs it, writes artifacts atomically when the config
/// names an output directory, and returns the outcome with the written paths.
pub fn run_config(config: &ExperimentConfig) -> Result<(Outcome, Vec<PathBuf>), RunError> {
    let outcome = run_experiment(&config.resolve()?, &config.check)?;
    let written = match &config.out {
        Some(dir) => write_artifacts(dir, &outcome.artifacts)?,
        None => Vec::new(),
    };
    Ok((outcome, written))
}

pub fn run_experiment(exp: &Experiment, check: &CheckSpec) -> Result<Outcome, RunError> {
    let mut out = match exp {
        Experiment::Envelope { payoff, params } => envelope(payoff, params)?,
        Experiment::Limit {
            payoff,
            params,
            a,
            nodes,
        } => limit(payoff, params, *a, *nodes)?,
        Experiment::Discrete {
            payoff,
            params,
            n,
            lambda,
            substeps,
        } => discrete(payoff, params, *n, *lambda, *substeps)?,
        Experiment::Convergence {
            payoff,
            params,
            a,
            n_list,
            substeps,
        } => convergence(payoff, params, *a, n_list, *substeps, check)?,
        Experiment::DualSim {
            policy,
            params,
            payoff,
            h,
            a,
            paths,
            seed,
        } => {
            let zero = PayoffSpec::constant(0.0).expect("zero payoff");
            let payoff = payoff.as_ref().unwrap_or(&zero);
            let ens = simulate_paths(policy, *h, params, *h / 20.0, *paths, *seed)?;
            let report = dual_report(&ens, *a, payoff, &DUAL_SIM_MS)?;
            let mut out = Outcome {
                kind: Kind::DualSim,
                artifacts: vec![
                    Artifact::json("dual_report.json", &report),
                    Artifact::new("martingale.csv", martingale_csv(&report.martingale_stats)),
                ],
                checks: Vec::new(),
                headline: Map::new(),
            };
            headline(&mut out, "weak_duality_bound", report.weak_duality_bound.value);
            headline(&mut out, "scaled_entropy", report.scaled_entropy.value);
            let max_z = report.martingale_stats.iter().map(|s| s.z().abs()).fold(0.0, f64::max);
            headline(&mut out, "max_abs_z", max_z);
            if let Some(bound) = check.max_z {
                out.checks.push(Check::new(
                    "martingale_z",
                    max_z <= bound,
                    format!("max |z| {max_z} vs {bound}"),
                ));
            }
            out
        }
        Experiment::AcceptanceSuite { seed } => {
            let suite = acceptance_suite(*seed)?;
            let mut artifacts = vec![Artifact::new("acceptance.csv", table_csv(&suite.criteria))];
            artifacts.extend(suite.artifacts);
            let checks = suite
                .criteria
                .iter()
                .map(|c| Check::new(format!("criterion_{}", c.id), c.passed, c.detail.clone()))
                .collect();
            Outcome {
                kind: Kind::AcceptanceSuite,
                artifacts,
                checks,
                headline: Map::new(),
            }
        }
    };
    if let Some(expect) = check.expect {
        let tol = check.tolerance.unwrap_or(1e-6);
        let got = out.headline.get("value").and_then(Value::as_f64);
        let passed = got.is_some_and(|v| (v - expect).abs() <= tol);
        out.checks.push(Check::new(
            "expect",
            passed,
            format!(
                "value {} vs expected {expect} within {tol}",
                got.map_or("none".into(), |v| v.to_string())
            ),
        ));
    }
    Ok(out)
}

fn headline(out: &mut Outcome, key: &str, v: f64) {
    out.headline.insert(key.into(), json!(v));
}

#[derive(Serialize)]
struct EnvelopeOut {
    price: f64,
    hedge_slope: f64,
    hull_vertices: Vec<(f64, f64)>,
}

fn envelope(payoff: &Payoff, params: &Params) -> Result<Outcome, RunError> {
    let hedge = superrep_price(payoff, params)?;
    let env = envelope_at(payoff, params.s0());
    let body = EnvelopeOut {
        price: hedge.price,
        hedge_slope: hedge.hedge_slope,
        hull_vertices: env.hull_vertices,
    };
    let mut out = Outcome {
        kind: Kind::Envelope,
        artifacts: vec![Artifact::json("envelope.json", &body)],
        checks: Vec::new(),
        headline: Map::new(),
    };
    headline(&mut out, "value", hedge.price);
    Ok(out)
}

#[derive(Serialize)]
struct LimitOut {
    value: f64,
    multiplier: f64,
    constraint_residual: f64,
    split_nodes: usize,
}

fn limit(payoff: &Payoff, params: &Params, a: f64, nodes: usize) -> Result<Outcome, RunError> {
    let sol = limit_value(&LimitProblem::new(a, *params, payoff.clone(), nodes)?)?;
    let body = LimitOut {
        value: sol.value,
        multiplier: sol.multiplier,
        constraint_residual: sol.constraint_residual,
        split_nodes: sol.split.as_ref().map_or(0, |s| s.nodes.len()),
    };
    let mut profile = String::from("z,zeta\n");
    for (z, zeta) in sol.nodes.iter().zip(&sol.zeta_values) {
        profile.push_str(&format!("{z},{zeta}\n"));
    }
    let mut out = Outcome {
        kind: Kind::Limit,
        artifacts: vec![
            Artifact::json("limit.json", &body),
            Artifact::new("limit_profile.csv", profile),
        ],
        checks: Vec::new(),
        headline: Map::new(),
    };
    headline(&mut out, "value", sol.value);
    headline(&mut out, "constraint_residual", sol.constraint_residual);
    Ok(out)
}

fn discrete(payoff: &Payoff, params: &Params, n: usize, lambda: f64, substeps: usize) -> Result<Outcome, RunError> {
    let problem = DelayedProblem::new(*params, payoff.clone(), n, lambda)?.with_substeps(substeps)?;
    let report = indifference_price_dp(&problem)?;
    // the matching limit problem has A = λH
    let a = lambda * problem.delta();
    let limit = limit_value(&LimitProblem::new(a, *params, payoff.clone(), DEFAULT_NODES)?)?.value;
    let row = ConvergenceRow {
        n,
        h: problem.delta(),
        lambda,
        price: report.price,
        limit_value: limit,
        gap: report.price - limit,
    };
    let mut out = Outcome {
        kind: Kind::Discrete,
        artifacts: vec![
            Artifact::new("price_discrete.csv", convergence_csv(&[row])),
            Artifact::json("price_discrete.json", &report),
        ],
        checks: Vec::new(),
        headline: Map::new(),
    };
    headline(&mut out, "value", report.price);
    headline(&mut out, "limit_value", limit);
    Ok(out)
}

fn convergence(
    payoff: &Payoff,
    params: &Params,
    a: f64,
    n_list: &[usize],
    substeps: usize,
    check: &CheckSpec,
) -> Result<Outcome, RunError> {
    let rows = delayed_hedge::dp::convergence_study(
        a,
        payoff,
        params,
        n_list,
        substeps,
        &delayed_hedge::dp::DpConfig::default(),
    )?;
    let last = rows.last().expect("N list is nonempty");
    let mut out = Outcome {
        kind: Kind::Convergence,
        artifacts: vec![Artifact::new("convergence.csv", convergence_csv(&rows))],
        checks: Vec::new(),
        headline: Map::new(),
    };
    headline(&mut out, "value", last.price);
    headline(&mut out, "limit_value", last.limit_value);
    headline(&mut out, "final_gap", last.gap);
    if let Some(max) = check.max_gap {
        out.checks.push(Check::new(
            "max_gap",
            last.gap.abs() <= max,
            format!("|gap| {} at N={} vs {max}", last.gap.abs(), last.n),
        ));
    }
    if check.monotone {
        let ok = rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs());
        out.checks
            .push(Check::new("monotone", ok, "|gap| strictly decreasing in N"));
    }
    Ok(out)
}
