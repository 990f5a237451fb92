use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid demonstration: {0}")]
    InvalidDemonstration(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("no warping path: sequence lengths {len_a} and {len_b} differ by more than band {band}")]
    NoWarpingPath { len_a: usize, len_b: usize, band: usize },

    #[error(
        "filter bandwidth omega = {omega} coincides with 2*lambda = {two_lambda}; \
         zeta_1 is undefined there, move omega away from 2*lambda (typically omega >> 2*lambda)"
    )]
    SingularBandwidth { omega: f64, two_lambda: f64 },

    #[error("baseline DTW score is zero; normalized score undefined")]
    DegenerateBaseline,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
