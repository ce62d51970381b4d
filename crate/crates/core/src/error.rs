use thiserror::Error;

use crate::model::{Symbol, ValidationReport};

/// Syntax or sort error in program, dataset or stream text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("evaluation did not stabilize within horizon {cap} (raise TDL_MAX_HORIZON to search further)")]
    HorizonExceeded { cap: i64 },
    #[error("rule {rule}: head variable {var} is not bound by the body")]
    UnboundHeadVariable { rule: usize, var: Symbol },
    #[error("query must be nonrecursive and connected: {0}")]
    Unsupported(String),
}

/// Failure of one of the decision procedures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid query: {0}")]
    Invalid(ValidationReport),
    #[error("query {output} is recursive; this problem is undecidable in general and only nonrecursive queries are supported")]
    Recursive { output: Symbol },
    #[error("no valid window size can be certified for {output}: the query is recursive and window analysis is undecidable in general")]
    NoCertifiedWindow { output: Symbol },
    #[error("query {output} is not connected")]
    Disconnected { output: Symbol },
    #[error("query {output} mentions explicit time points, which this procedure does not support")]
    HasTimePoints { output: Symbol },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("unfolding produced more than {cap} conjunctive queries")]
    UnfoldingCap { cap: usize },
    #[error("brute-force enumeration exceeded {cap} candidates")]
    EnumerationCap { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("event for tick {found} arrived after tick {previous}")]
    OutOfOrder { previous: i64, found: i64 },
    #[error("ticks must be non-negative, found {0}")]
    NegativeTick(i64),
    #[error("window parameters rejected: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Decision(#[from] DecisionError),
}

impl From<EngineError> for StreamError {
    fn from(e: EngineError) -> Self {
        StreamError::Decision(DecisionError::Engine(e))
    }
}
