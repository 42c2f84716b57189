use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The k-th neighbor coincides with the query point.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("k = {k}: only {found} points far from the boundary, need at least {required}")]
    InsufficientInterior {
        k: usize,
        found: usize,
        required: usize,
    },

    #[error("k selection failed for every candidate: {}", format_causes(.0))]
    SelectionFailed(Vec<(usize, Error)>),
}

fn format_causes(causes: &[(usize, Error)]) -> String {
    causes
        .iter()
        .map(|(k, e)| format!("[k={k}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_point(self, index: usize) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                index,
                source: Box::new(e),
            },
        }
    }

    /// True for failures caused by the numbers in the data rather than by the
    /// request: duplicated points, too few interior points, failed selection.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateSample(_) | Error::InsufficientInterior { .. } => true,
            Error::AtPoint { source, .. } => source.is_numerical(),
            Error::SelectionFailed(causes) => causes.iter().any(|(_, e)| e.is_numerical()),
            Error::InvalidInput(_) | Error::InvalidConfig(_) => false,
        }
    }

    /// Point index attached to the error, if any.
    pub fn point_index(&self) -> Option<usize> {
        match self {
            Error::AtPoint { index, .. } => Some(*index),
            _ => None,
        }
    }
}
