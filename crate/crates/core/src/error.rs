use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (last step {last_step:.3e}, residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        residual: f64,
    },

    #[error("shooting oracle failed: {0}")]
    OracleFailure(String),

    #[error("not a blow-up: {0}")]
    NotABlowup(String),

    #[error("inconsistent estimate: {0}")]
    InconsistentEstimate(String),

    #[error("collision in synthetic sequence: {0}")]
    Collision(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error("hash mismatch for {path}")]
    HashMismatch { path: PathBuf },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
