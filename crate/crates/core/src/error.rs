use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid matrix shape {rows}x{cols} for {len} entries")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("svd did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("step {t} is outside the schedule horizon {horizon}")]
    Index { t: usize, horizon: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("empty batch")]
    EmptyBatch,
    #[error("inconsistent constants: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
