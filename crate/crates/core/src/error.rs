use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse network document: {0}")]
    Parse(String),

    #[error("unsupported network document version {0}")]
    UnsupportedVersion(u32),

    #[error("nonpositive rate on edge {edge}: {detail}")]
    NonpositiveRate { edge: usize, detail: String },

    #[error("invalid unavailability on edge {edge}: {detail}")]
    InvalidProbability { edge: usize, detail: String },

    #[error("edge {edge} references unknown node `{node}`")]
    UnknownNode { edge: usize, node: String },

    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),

    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),

    #[error("need at least 2 terminals, got {0}")]
    TooFewTerminals(usize),

    #[error("terminals are not connected when every component is available")]
    DisconnectedTerminals,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires an all-terminal system (k = n)")]
    NotAllTerminal,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("{what}: {size} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    #[error("formula is almost surely false: every clause has probability zero")]
    FormulaAlmostSurelyFalse,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
