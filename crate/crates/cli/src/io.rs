//! Sidecar files in, artifacts out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use delayed_hedge::sim::RawPolicy;
use delayed_hedge::{Params, Payoff, Policy};
use serde::de::DeserializeOwned;

use crate::RunError;

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, RunError> {
    let text =
        fs::read_to_string(path).map_err(|e| RunError::config(format!("{what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::config(format!("{what} file {}: {e}", path.display())))
}

/// `{"breakpoints": [...], "values": [...]}`.
pub fn load_payoff(path: &Path) -> Result<Payoff, RunError> {
    read_json(path, "payoff")
}

/// `{"s0": .., "sigma": .., "mu": .., "T": ..}`.
pub fn load_params(path: &Path) -> Result<Params, RunError> {
    read_json(path, "params")
}

/// `{"partition": [...], "pieces": [{"x": [...], "nu": [...]}, ...]}`.
pub fn load_policy(path: &Path) -> Result<Policy, RunError> {
    let raw: RawPolicy<f64> = read_json(path, "policy")?;
    Policy::try_from(raw).map_err(|e| RunError::config(format!("policy file {}: {e}", path.display())))
}

/// A named output file held in memory until it is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Artifact {
            name: name.into(),
            contents: contents.into(),
        }
    }

    pub fn json<T: serde::Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        Artifact::new(name, text)
    }
}

/// Writes `contents` to a temporary file in the target directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let werr = |source| RunError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(werr)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(werr)?;
    tmp.write_all(contents).map_err(werr)?;
    tmp.as_file().sync_all().map_err(werr)?;
    tmp.persist(path).map_err(|e| werr(e.error))?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, RunError> {
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            write_atomic(&path, a.contents.as_bytes())?;
            Ok(path)
        })
        .collect()
}
