use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Violations of the model and specification invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("state {state}, action {action}: probabilities sum to {sum}, expected 1")]
    RowSum {
        state: usize,
        action: String,
        sum: String,
    },
    #[error(
        "states {first} and {second} share observation {observation} but enable different actions"
    )]
    ObservationActionMismatch {
        observation: usize,
        first: usize,
        second: usize,
    },
    #[error("state id {id} is out of range (model has {count} states)")]
    DanglingState { id: usize, count: usize },
    #[error("observation id {id} is out of range (model has {count} observations)")]
    DanglingObservation { id: usize, count: usize },
    #[error("state {0} has no observation")]
    MissingObservation(usize),
    #[error("state {0} has no enabled action")]
    Deadlock(usize),
    #[error("negative value {value} for state {state}, action {action}")]
    Negative {
        state: usize,
        action: String,
        value: String,
    },
    #[error("the target set is empty")]
    EmptyTarget,
    #[error("state {0} is both a target and an avoid state")]
    TargetAvoidOverlap(usize),
    #[error("threshold {0} lies outside (0,1)")]
    ThresholdOutOfRange(String),
    #[error("{0}")]
    Specification(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("observation {observation} has probability zero after action {action}")]
    ZeroProbabilityObservation { action: usize, observation: usize },
    #[error("action {action} is not enabled for observation {observation}")]
    DisabledAction { action: usize, observation: usize },
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
