use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Unreadable or invalid config, sidecar file or knob. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    /// The numerical engine rejected the experiment. Exit code 2.
    #[error("{0}")]
    Engine(String),
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        2
    }
}

macro_rules! engine_error {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Engine(e.to_string())
            }
        }
    )*};
}

engine_error!(
    delayed_hedge::dp::DpError,
    delayed_hedge::limit::LimitError,
    delayed_hedge::envelope::EnvelopeError,
    delayed_hedge::sim::SimError,
    delayed_hedge::model::QuadratureError
);
