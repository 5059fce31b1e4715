use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no variables")]
    NoVariables,

    #[error("table line {line}: {msg}")]
    Table { line: usize, msg: String },

    #[error("no avalanches")]
    NoAvalanches,

    #[error("too few tail samples: need at least {needed} at or above s_min = {s_min}, got {got}")]
    TooFewTailSamples { needed: u64, got: u64, s_min: u64 },

    #[error("no dynamic range")]
    NoDynamicRange,

    #[error("no overlap between rescaled histograms")]
    NoOverlap,

    #[error("transient not converged (final normalized slope {final_slope:e})")]
    TransientNotConverged { final_slope: f64 },

    #[error("relaxation exceeded {0} sweeps")]
    SweepLimit(u64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
