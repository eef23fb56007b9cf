use thiserror::Error;

use crate::graph::Edge;

/// Errors raised across the crate. Vertex labels are 1-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Two agents joined by an edge (or two bare points) coincide.
    #[error("coincident agents{}", .edge.map(|e| format!(" on edge {e}")).unwrap_or_default())]
    CoincidentAgents { edge: Option<Edge> },

    #[error("cannot project onto the complement of a zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sum of projection matrices is singular (target bearings are parallel)")]
    SingularProjectionSum,

    #[error("bearings are degenerate: rank of the stacked projections is {rank}, expected {expected}")]
    DegenerateBearings { rank: usize, expected: usize },

    #[error("graph is neither LFF nor ordered LFF")]
    NotOrderedLff,

    #[error("equilibrium bearings match neither the targets nor their negation")]
    InconsistentConfiguration,

    #[error("trajectory has no samples")]
    EmptyTrajectory,

    #[error("graph of the first formation is not a subgraph of the second")]
    NotSubgraph,

    #[error("targets on shared edges differ")]
    MismatchedTargets,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", err.line(), err.column(), err))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
