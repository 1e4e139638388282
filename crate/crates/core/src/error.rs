use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("inner solver not certified after {iters} iterations (last residual norm {residual:.3e})")]
    InnerNotCertified { iters: usize, residual: f64 },

    #[error("outer iteration {k}: {source}")]
    AtIteration { k: usize, source: Box<Error> },

    #[error("invariant violated at iteration {k}: {what}")]
    Invariant { k: usize, what: String },

    #[error("certification failed at index {index}: {what}")]
    Certification { index: usize, what: String },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, k: usize) -> Self {
        Error::AtIteration {
            k,
            source: Box::new(self),
        }
    }
}
