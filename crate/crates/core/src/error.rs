use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid sector request: {0}")]
    InvalidSector(String),

    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("operator couples sector {0} to a configuration outside it")]
    CrossSector(String),

    #[error("numerical failure in sector {label}: {reason}")]
    Numerical { label: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("estimator undefined: {0}")]
    EstimatorUndefined(String),

    #[error("moment relation is degenerate: {0}")]
    Degenerate(String),

    #[error("not implemented: {0}")]
    Unimplemented(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
