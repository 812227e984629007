use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("PMV clothing-temperature iteration did not converge after {iterations} steps")]
    PmvNoConvergence { iterations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("node {action} is not a child of node {node}")]
    NotAChild { node: usize, action: usize },

    #[error("task graph is malformed: {0}")]
    Graph(String),

    #[error("subroutine recursion exceeded depth {0}")]
    DepthExceeded(usize),

    #[error("progress {progress} is out of range 0..={max}")]
    ProgressOutOfRange { progress: u32, max: u32 },

    #[error("no episode logs to aggregate")]
    EmptyInput,

    #[error("{path}:{line}: {detail}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical core (as opposed to config or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::PmvNoConvergence { .. } | Error::DepthExceeded(_)
        )
    }
}
