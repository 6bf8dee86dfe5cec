use thiserror::Error;

/// Every failure the library can report. The CLI maps each variant to its
/// own exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("malformed function: {0}")]
    MalformedFunction(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("not a Sigma formula: {0}")]
    NotSigma(String),
    #[error("not a Sigma-bang formula: {0}")]
    NotSigmaBang(String),
    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),
    #[error("derivation is not cut-free")]
    NotCutFree,
    #[error("formula audit failed: {0}")]
    AuditFailed(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("no witness supplied for phi rule {0}")]
    MissingPhiWitness(usize),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("unbound condition variable `{0}`")]
    UnboundConditionVariable(String),
    #[error("obligation not verified: {0}")]
    ObligationUnverified(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("derivation rejected: {0}")]
    CheckFailed(String),
    #[error("class violation: {0}")]
    ClassViolation(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
