use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("parameter `{key}` out of range (must be positive): {value}")]
    NonPositiveParameter { key: String, value: f64 },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} nodes, grid has {expected}")]
    FieldSizeMismatch { expected: usize, got: usize },

    #[error("boundary node {node} holds {value}, expected boundary temperature {expected}")]
    BoundaryMismatch { node: usize, value: f64, expected: f64 },

    #[error("mollifier half-width {epsilon} is below the resolvable minimum {min}")]
    UnresolvableWidth { epsilon: f64, min: f64 },

    #[error("sign condition violated at theta = {theta}: v = {velocity}")]
    SignConditionViolated { theta: f64, velocity: f64 },

    #[error("invalid velocity table: {0}")]
    InvalidTable(String),

    #[error("initial interface position {0} is not inside the domain")]
    InvalidInitialInterface(f64),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("Picard iteration diverged at step {step}: residual {residual:e} after {iterations} iterations")]
    PicardDivergence { step: usize, iterations: usize, residual: f64 },

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("no root of the Neumann relation in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("refinement sequence is not converging: {0}")]
    NonConverging(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("matrix is not rank-one: second singular value {sigma2:e}")]
    NotRankOne { sigma2: f64 },

    #[error("volume fraction {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("laminate is incompatible with the austenite: second singular value {sigma2:e}")]
    IncompatibleSpec { sigma2: f64 },

    #[error("missing or unreadable artifact: {0}")]
    MissingArtifacts(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
