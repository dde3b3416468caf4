//! Experiment runner behind the `delayed-hedge` binary.
//!
//! An experiment is an [`ExperimentConfig`], read from TOML or assembled from
//! command-line flags. [`run_config`] resolves its sidecar files, runs it,
//! writes the artifacts atomically and reports tolerance checks. Exit codes:
//! 0 when every check passes, 1 on a failed check, 2 on a usage or config
//! error.

pub mod acceptance;
pub mod config;
mod error;
pub mod io;
mod run;

pub use acceptance::{acceptance_suite, Criterion, SuiteOutput};
pub use config::{CheckSpec, Experiment, ExperimentConfig, Kind};
pub use error::RunError;
pub use io::{write_atomic, Artifact};
pub use run::{run_config, run_experiment, Check, Outcome};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "DELAYED_HEDGE_THREADS";
