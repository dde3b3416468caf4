//! TOML experiment configs.
//!
//! ```toml
//! kind = "convergence"
//! payoff = "butterfly.json"   # relative to this file
//! params = "params.json"
//! A = 1.0
//! N = [4, 8, 16, 32]
//! substeps = 8
//! out = "out/convergence"
//!
//! [check]
//! max_gap = 0.05
//! monotone = true
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use delayed_hedge::model::{DEFAULT_NODES, MAX_NODES};
use delayed_hedge::sim::MIN_PATHS;
use delayed_hedge::{Params, Payoff, Policy};
use serde::{Deserialize, Serialize};

use crate::io::{load_params, load_payoff, load_policy};
use crate::RunError;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_PATHS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Limit,
    Discrete,
    Envelope,
    DualSim,
    Convergence,
    AcceptanceSuite,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Limit => "limit",
            Kind::Discrete => "discrete",
            Kind::Envelope => "envelope",
            Kind::DualSim => "dual-sim",
            Kind::Convergence => "convergence",
            Kind::AcceptanceSuite => "acceptance-suite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NList {
    One(usize),
    Many(Vec<usize>),
}

impl NList {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            NList::One(n) => vec![*n],
            NList::Many(v) => v.clone(),
        }
    }
}

/// Optional tolerance checks. The run exits with status 1 when any fails.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// Expected headline value (price, limit value, weak-duality bound).
    pub expect: Option<f64>,
    /// Absolute tolerance for `expect`, default 1e-6.
    pub tolerance: Option<f64>,
    /// Convergence: bound on |gap| at the largest N.
    pub max_gap: Option<f64>,
    /// Convergence: |gap| strictly decreasing in N.
    #[serde(default)]
    pub monotone: bool,
    /// Dual simulation: bound on every martingale |z|.
    pub max_z: Option<f64>,
}

/// One experiment as written in a TOML file or assembled from CLI flags.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub payoff: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<NList>,
    pub lambda: Option<f64>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub substeps: Option<usize>,
    pub paths: Option<usize>,
    pub nodes: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub check: CheckSpec,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            payoff: None,
            params: None,
            policy: None,
            a: None,
            n: None,
            lambda: None,
            h: None,
            substeps: None,
            paths: None,
            nodes: None,
            seed: None,
            out: None,
            check: CheckSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| RunError::config(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.payoff, &mut cfg.params, &mut cfg.policy, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Loads the sidecar files and checks every knob the kind needs.
    pub fn resolve(&self) -> Result<Experiment, RunError> {
        let exp = match self.kind {
            Kind::Envelope => Experiment::Envelope {
                payoff: self.load_payoff()?,
                params: self.load_params()?,
            },
            Kind::Limit => Experiment::Limit {
                payoff: self.load_payoff()?,
                params: self.load_params()?,
                a: positive("A", self.a)?,
                nodes: self.nodes()?,
            },
            Kind::Discrete => {
                let n = self.n_list()?;
                if n.len() != 1 {
                    return Err(RunError::config("discrete takes a single N"));
                }
                Experiment::Discrete {
                    payoff: self.load_payoff()?,
                    params: self.load_params()?,
                    n: n[0],
                    lambda: positive("lambda", self.lambda)?,
                    substeps: self.substeps(1)?,
                }
            }
            Kind::Convergence => Experiment::Convergence {
                payoff: self.load_payoff()?,
                params: self.load_params()?,
                a: positive("A", self.a)?,
                n_list: self.n_list()?,
                substeps: self.substeps(delayed_hedge::dp::STUDY_SUBSTEPS)?,
            },
            Kind::DualSim => {
                let paths = self.paths.unwrap_or(DEFAULT_PATHS);
                if paths < MIN_PATHS {
                    return Err(RunError::config(format!("paths must be at least {MIN_PATHS}")));
                }
                Experiment::DualSim {
                    policy: load_policy(self.require("policy", &self.policy)?)?,
                    params: self.load_params()?,
                    payoff: self.payoff.as_deref().map(load_payoff).transpose()?,
                    h: positive("H", self.h)?,
                    a: positive("A", self.a)?,
                    paths,
                    seed: self.seed.unwrap_or(DEFAULT_SEED),
                }
            }
            Kind::AcceptanceSuite => Experiment::AcceptanceSuite {
                seed: self.seed.unwrap_or(DEFAULT_SEED),
            },
        };
        if let Some(t) = self.check.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(RunError::config("check.tolerance must be a nonnegative number"));
            }
        }
        Ok(exp)
    }

    fn require<'a>(&self, name: &str, p: &'a Option<PathBuf>) -> Result<&'a Path, RunError> {
        p.as_deref()
            .ok_or_else(|| RunError::config(format!("{} experiment needs a {name} file", self.kind)))
    }

    fn load_payoff(&self) -> Result<Payoff, RunError> {
        load_payoff(self.require("payoff", &self.payoff)?)
    }

    fn load_params(&self) -> Result<Params, RunError> {
        load_params(self.require("params", &self.params)?)
    }

    fn nodes(&self) -> Result<usize, RunError> {
        let n = self.nodes.unwrap_or(DEFAULT_NODES);
        if !(2..=MAX_NODES).contains(&n) {
            return Err(RunError::config(format!("nodes must lie in 2..={MAX_NODES}, got {n}")));
        }
        Ok(n)
    }

    fn substeps(&self, default: usize) -> Result<usize, RunError> {
        match self.substeps.unwrap_or(default) {
            0 => Err(RunError::config("substeps must be at least 1")),
            k => Ok(k),
        }
    }

    fn n_list(&self) -> Result<Vec<usize>, RunError> {
        let n = self
            .n
            .as_ref()
            .ok_or_else(|| RunError::config(format!("{} experiment needs N", self.kind)))?
            .to_vec();
        if n.is_empty() || n.contains(&0) {
            return Err(RunError::config("N must be a nonempty list of positive integers"));
        }
        Ok(n)
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<f64, RunError> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(RunError::config(format!("{name} must be positive and finite, got {x}"))),
        None => Err(RunError::config(format!("missing {name}"))),
    }
}

/// A config with its files loaded and knobs checked.
#[derive(Debug, Clone)]
pub enum Experiment {
    Envelope {
        payoff: Payoff,
        params: Params,
    },
    Limit {
        payoff: Payoff,
        params: Params,
        a: f64,
        nodes: usize,
    },
    Discrete {
        payoff: Payoff,
        params: Params,
        n: usize,
        lambda: f64,
        substeps: usize,
    },
    Convergence {
        payoff: Payoff,
        params: Params,
        a: f64,
        n_list: Vec<usize>,
        substeps: usize,
    },
    DualSim {
        policy: Policy,
        params: Params,
        payoff: Option<Payoff>,
        h: f64,
        a: f64,
        paths: usize,
        seed: u64,
    },
    AcceptanceSuite {
        seed: u64,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_convergence_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
kind = "convergence"
payoff = "f.json"
params = "p.json"
A = 1.0
N = [4, 8]
[check]
max_gap = 0.05
monotone = true
"#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Kind::Convergence);
        assert_eq!(cfg.n.unwrap().to_vec(), vec![4, 8]);
        assert_eq!(cfg.check.max_gap, Some(0.05));
        assert!(cfg.check.monotone);
    }

    #[test]
    fn single_n_and_unknown_keys() {
        let cfg = ExperimentConfig::from_toml("kind = \"discrete\"\nN = 16\n").unwrap();
        assert_eq!(cfg.n.unwrap().to_vec(), vec![16]);
        assert!(ExperimentConfig::from_toml("kind = \"discrete\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"pricing\"\n").is_err());
    }

    #[test]
    fn missing_knobs_are_config_errors() {
        let mut cfg = ExperimentConfig::new(Kind::Limit);
        assert!(matches!(cfg.resolve(), Err(RunError::Config(_))));
        cfg.payoff = Some("/nonexistent.json".into());
        assert!(matches!(cfg.resolve(), Err(RunError::Config(_))));
    }
}
