use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters for family `{family}`: {reason}")]
    FamilyParams { family: String, reason: String },

    #[error("exact matching search is limited to {limit} edges, graph has {edges}")]
    InstanceTooLarge { edges: usize, limit: usize },

    #[error("graph is not a complete bipartite graph")]
    NotCompleteBipartite,

    #[error("file index {0} is not stored in this system")]
    ThetaOutOfRange(String),

    #[error("coordinate {0} is out of range for the store")]
    CoordinateOutOfRange(String),

    #[error("request on server {server} references file {file} which it does not store")]
    FileNotOnServer { server: usize, file: String },

    #[error("decoding plan references missing request ({server},{position})")]
    PlanOutOfRange { server: usize, position: usize },

    #[error("answer vector does not match the transcript's request lists")]
    AnswerShape,

    #[error("transcript has no requests")]
    NoRequests,

    #[error("retrieval attribution is undefined for target bit {0}")]
    AttributionUndefined(usize),

    #[error("scheme `{scheme}` cannot run on this graph: {reason}")]
    Incompatible { scheme: String, reason: String },

    #[error("cannot lift `{0}`: base scheme must satisfy SRP and support orientation")]
    NotLiftable(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("randomness space has more than {0} points")]
    BudgetExceeded(u64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
