use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("conditional density undefined at x = {x}: {reason}")]
    UnsupportedPoint { x: f64, reason: String },

    #[error("no convergence in {what}: {detail}")]
    NoConvergence { what: String, detail: String },

    #[error("target {target} unreachable: function stayed below it up to {cap}")]
    TargetUnreachable { target: f64, cap: f64 },

    #[error("eps = {eps} outside the admissible range [0, {limit})")]
    EpsOutOfRange { eps: f64, limit: f64 },

    #[error("model not supported by {op}: {reason}")]
    ModelNotSupported { op: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at key `{key}`: {reason}")]
    Parse { key: String, reason: String },
}

impl Error {
    pub(crate) fn no_convergence(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NoConvergence {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn unsupported(op: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ModelNotSupported {
            op: op.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
