use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid catalog entry: {0}")]
    Catalog(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("degenerate metric (condition number {condition:.3e})")]
    DegenerateMetric { condition: f64 },
    #[error("singular Jacobian (condition number {condition:.3e})")]
    SingularJacobian { condition: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
