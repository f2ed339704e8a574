use thiserror::Error;

/// Errors from zone construction and zone operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZoneError {
    #[error("a zone needs at least the reference clock (dim >= 1)")]
    ZeroDimension,
    #[error("matrix of length {len} does not match dimension {dim}")]
    MatrixSize { dim: usize, len: usize },
    #[error("clock index {clock} out of range for dimension {dim}")]
    ClockOutOfRange { clock: usize, dim: usize },
    #[error("the reference clock x0 cannot be freed or reset")]
    ReferenceClock,
    #[error("clock {0} has a negative value")]
    NegativeValuation(usize),
    #[error("valuation has {got} clocks, zone has {expected}")]
    ValuationSize { expected: usize, got: usize },
    #[error("timed predecessor fixpoint did not stabilise within {0} iterations")]
    IterationCap(usize),
}

/// Problems in a model or property, reported with enough position
/// information to find them in the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("in {context}, column {column}: {message}")]
    Expression { context: String, column: usize, message: String },
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} `{name}` in {context}")]
    Unknown { kind: &'static str, name: String, context: String },
    #[error("{0}")]
    Invalid(String),
}

/// A list of model errors; parsing reports all problems it finds.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ModelErrors(pub Vec<ModelError>);

impl From<ModelError> for ModelErrors {
    fn from(e: ModelError) -> Self {
        ModelErrors(vec![e])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("state {state}: action probabilities sum to {sum}, not 1")]
    BadDistribution { state: usize, sum: String },
    #[error("successor {succ} of state {state} does not exist")]
    UnknownSuccessor { state: usize, succ: usize },
    #[error("value iteration did not converge within {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },
}

/// Failures of the model-checking engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelErrors),
    #[error("initial state violates the invariant of `{0}`")]
    InitialInvariant(String),
    #[error("exploration did not terminate within {cap} iterations ({states} symbolic states so far)")]
    ExplorationCap { cap: usize, states: usize },
    #[error("qualitative fixpoint did not stabilise within {0} iterations")]
    FixpointCap(usize),
    #[error(transparent)]
    Zone(#[from] ZoneError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("digital clocks engine cannot handle {0}")]
    Unsupported(String),
    #[error("digital state space exceeds the limit of {0} states")]
    StateLimit(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<ModelError> for EngineError {
    fn from(e: ModelError) -> Self {
        EngineError::Model(e.into())
    }
}
