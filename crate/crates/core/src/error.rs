use std::path::PathBuf;

use thiserror::Error;

use crate::array::SteeringDirection;

pub type Result<T, E = SteerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SteerError {
    /// An argument is outside the mathematical domain of an operation
    /// (direction outside the front hemisphere, negative SINR input,
    /// mismatched vector lengths, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// The oracle has no measurement for the requested beam pair.
    #[error("no INR measurement for tx {tx} / rx {rx}")]
    MeasurementUnavailable {
        tx: SteeringDirection,
        rx: SteeringDirection,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Capacity fraction is undefined when the codebook sum capacity is zero.
    #[error("capacity fraction undefined: codebook sum capacity is zero")]
    UndefinedKappa,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("lookup precompute failed at (i={i}, j={j}): {source}")]
    Lookup {
        i: usize,
        j: usize,
        #[source]
        source: Box<SteerError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SteerError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SteerError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SteerError::Config(msg.into())
    }
}
