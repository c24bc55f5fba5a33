use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("edge {0} does not exist")]
    UnknownEdge(EdgeId),
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("edge {0} already exists")]
    DuplicateEdge(EdgeId),
    #[error("graph is not cubic: vertex {vertex} has degree {degree}")]
    NotCubic { vertex: VertexId, degree: usize },
    #[error("graph is not 3-edge-connected")]
    NotThreeEdgeConnected,
    #[error("loops are not supported (edge {0})")]
    Loop(EdgeId),
    #[error("invalid rotation system: {0}")]
    InvalidRotation(String),
    #[error("invalid ear decomposition: {0}")]
    InvalidEarDecomposition(String),
    #[error("degree discipline violated at vertex {vertex}: {detail}")]
    DegreeDiscipline { vertex: VertexId, detail: String },
    #[error("invalid mixed graph: {0}")]
    InvalidMixedGraph(String),
    #[error("reduction choice does not belong to this mixed graph")]
    StaleChoice,
    #[error("no correct reduction of {0:?} matches the requested transitions")]
    NoMatchingReduction(Vec<VertexId>),
    #[error("invalid reduction target: {0}")]
    InvalidTarget(String),
    #[error("reduction did not consume the whole graph")]
    IncompleteReduction,
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("the decomposition does not admit the designated cycle and fixed paths: {0}")]
    NotAdmitted(String),
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error("embedding condition violated: {0}")]
    Embedding(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
