use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("homophily undefined for isolated node {0}")]
    UndefinedHomophily(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("validation failed: {0}")]
    Validation(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
