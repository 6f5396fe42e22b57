use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("domain error at t={time}: {detail}")]
    DomainAt { time: f64, detail: String },

    #[error("unknown coordinate `{name}` for space `{space}`")]
    UnknownCoordinate { name: String, space: String },

    #[error("invalid space `{space}`: {detail}")]
    InvalidSpace { space: String, detail: String },

    #[error("malformed assignment: {0}")]
    MalformedAssignment(String),

    #[error("foot mismatch: `{left}` is not `{right}`")]
    FootMismatch { left: String, right: String },

    #[error("connecting leg `{0}` is not a projection-relabel map")]
    NonProjectionLeg(String),

    #[error("metric is singular or not positive-definite: {0}")]
    SingularMetric(String),

    #[error("Hamiltonian is not separable into T(p) + V(q); verlet unavailable")]
    NonSeparable,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("syntax error at {line}:{col}: expected {}", expected.join(" | "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
    },

    #[error("undeclared identifier `{name}` at {line}:{col}")]
    UndeclaredIdentifier { name: String, line: usize, col: usize },

    #[error("duplicate declaration `{name}` at {line}:{col}")]
    DuplicateDeclaration { name: String, line: usize, col: usize },

    #[error("{0}")]
    Semantic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
