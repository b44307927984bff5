//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HexError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("arity mismatch for predicate '{predicate}': used with {found} arguments but earlier with {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown external source '&{0}'")]
    UnknownOracle(String),

    #[error("signature mismatch for external source '&{name}': {msg}")]
    SignatureMismatch { name: String, msg: String },

    #[error("duplicate external source name '{0}'")]
    DuplicateOracle(String),

    #[error("oracle table error: {0}")]
    OracleTable(String),

    #[error("output enumeration not supported for '&{name}': {msg}")]
    EnumerationUnsupported { name: String, msg: String },

    #[error("unsafe variable '{variable}' in rule '{rule}'")]
    UnsafeVariable { rule: String, variable: String },

    #[error("program is not ground: {0}")]
    NotGround(String),

    #[error("reserved name collision: '{0}' already occurs in the program")]
    ReservedCollision(String),

    #[error("strong-negation rewrite collision: fresh atom '{0}' already occurs")]
    RewriteCollision(String),

    #[error("external atom payload not allowed here: {0}")]
    UnexpectedExternal(String),

    #[error("{what} exceeds cap: {size} > {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid instance spec: {0}")]
    InvalidInstanceSpec(String),

    #[error("unknown atom '{0}'")]
    UnknownAtom(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HexError>;
