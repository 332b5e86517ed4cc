use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("kernel footprint 6c = {footprint} m does not fit in the domain (min side {min_side} m)")]
    DomainTooSmall { footprint: f64, min_side: f64 },

    #[error("kernel construction failed: {0}")]
    KernelConstruction(String),

    #[error("simulation diverged at step {step} (t = {time:.6e} s): non-finite {what}")]
    Divergence { step: usize, time: f64, what: &'static str },

    #[error("refinement level h = {h:e} m, dt = {dt:e} s failed: {source}")]
    Level {
        h: f64,
        dt: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
