use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("node index out of range: {index} (num_nodes = {num_nodes})")]
    NodeOutOfRange { index: i64, num_nodes: usize },

    #[error("empty hyperedge at position {0}")]
    EmptyHyperedge(usize),

    #[error("{what} length mismatch: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("hypergraph has no labels")]
    MissingLabels,

    #[error("hypergraph has no node features")]
    MissingFeatures,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}: {value}")]
    NonFiniteLoss { epoch: usize, value: f64 },

    #[error("could not draw a valid split after {0} attempts")]
    SplitExhausted(usize),

    #[error("HSBM sampler starved: accepted {accepted} of {wanted} hyperedges after {attempts} candidates")]
    AcceptanceStarvation {
        accepted: usize,
        wanted: usize,
        attempts: usize,
    },

    #[error("labels must be binary, found {0} classes")]
    NonBinaryLabels(usize),

    #[error("k-means left a cluster empty in every one of {0} seedings")]
    EmptyCluster(usize),

    #[error("membership list is empty")]
    EmptyMemberships,

    #[error("optimizer failed: {0}")]
    Optimizer(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
