use thiserror::Error;

/// Errors raised by every engine in the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Json(String),

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("arity error for `{symbol}`: expected {expected}, found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid symbol `{symbol}`: {message}")]
    Validation { symbol: String, message: String },

    #[error("universe size {size} exceeds the configured maximum {max}")]
    UniverseTooLarge { size: usize, max: usize },

    #[error("no value assigned to free variable `{0}`")]
    MissingAssignment(String),

    #[error("block mismatch: {0}")]
    BlockMismatch(String),

    #[error("variable collision: {0}")]
    VariableCollision(String),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("budget exceeded: estimated work {estimate} is above the limit {limit}")]
    BudgetExceeded { estimate: u128, limit: u64 },

    #[error("not an orbit: {0}")]
    NotAnOrbit(String),

    #[error("empty property: {0}")]
    EmptyProperty(String),

    #[error("not an equivalence relation: {0}")]
    NotEquivalence(String),

    #[error("structure has no function symbols")]
    NoFunctions,

    #[error("type is not preserving: {0}")]
    NotPreserving(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("not Henkin-complete: `{0}` is undecided")]
    NotHenkinComplete(String),

    #[error("inconsistent theory: {0}")]
    Inconsistent(String),

    #[error("not a substructure: {0}")]
    NotSubstructure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn validation(symbol: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            symbol: symbol.into(),
            message: message.into(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
