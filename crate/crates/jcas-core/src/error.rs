use thiserror::Error;

/// Errors produced by generation, clustering, and statistics routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A value failed a structural precondition (non-finite angle, negative delay, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller-supplied parameter is out of range (k > number of MPCs, n0 > N_s, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A requested channel would contain no clusters on either link.
    #[error("empty channel: {0}")]
    EmptyChannel(String),

    /// A quantity is mathematically undefined for the given input
    /// (sharing degree with zero total power, validity index with k < 2, ...).
    #[error("undefined value: {0}")]
    Undefined(String),

    /// Distribution fitting needs more samples than were provided.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
