use thiserror::Error;

use crate::types::PlayerId;

/// Errors raised by game rules and episode bookkeeping.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid action by player {player}: {reason}")]
    InvalidAction { player: PlayerId, reason: String },
    #[error("unknown player id {0}")]
    UnknownPlayer(PlayerId),
    #[error("episode already terminal")]
    Terminal,
    #[error("invalid game spec: {0}")]
    InvalidSpec(String),
    #[error("wrong action kind for {game}: expected {expected}")]
    WrongActionKind { game: String, expected: String },
}

/// Errors raised by causal-graph operations.
#[derive(Debug, Error)]
pub enum ScmError {
    #[error("duplicate observation key '{0}'")]
    DuplicateKey(String),
    #[error("observation keys must be non-empty")]
    EmptyKeys,
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error("missing value for root node '{0}'")]
    MissingRootValue(String),
    #[error("backend error during inference: {0}")]
    Backend(#[from] BackendError),
}

/// Errors raised by reasoning backends.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request must contain at least one user message")]
    EmptyRequest,
    #[error("no scripted rule matched purpose '{purpose}'")]
    NoRule { purpose: String },
    #[error("malformed scripted rule at line {line}: {reason}")]
    BadRule { line: usize, reason: String },
    #[error("template error: {0}")]
    Template(String),
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend response malformed: {0}")]
    MalformedResponse(String),
}

/// Errors raised when loading or validating model archives.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("missing or unrecognized archive header")]
    BadHeader,
    #[error("unsupported archive version {0}")]
    Version(u32),
    #[error("archive payload malformed: {0}")]
    Malformed(String),
    #[error("archive violates graph invariant: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by tournament configuration and orchestration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}
