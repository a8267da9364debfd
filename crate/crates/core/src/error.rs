use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("zero-norm vector has no direction")]
    ZeroNorm,

    #[error("vector coincides with the re-normalization mean; direction undefined")]
    DegenerateRenormalization,

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("norm violation at row {row}: norm {norm}")]
    NormViolation { row: usize, norm: f64 },

    #[error("labels must contain at least one positive and one negative")]
    SingleClass,

    #[error("shell fit failed to find a descent step at iteration {iteration} (gradient norm {grad_norm:e})")]
    NoDescent { iteration: usize, grad_norm: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub fn at_row(self, row: usize) -> Self {
        Error::Row { row, source: alloc::boxed::Box::new(self) }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
