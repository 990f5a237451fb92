use thiserror::Error;

/// Failure of a command, mapped onto the process exit code: 1 for usage and
/// configuration problems, 2 for domain failures (no warping path, failed
/// certificate, truncated run, failed batch cells).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] l1ds_core::Error),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use l1ds_core::Error as E;
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Domain(_) => 2,
            Self::Core(e) => match e {
                E::NoWarpingPath { .. }
                | E::SingularBandwidth { .. }
                | E::DegenerateBaseline
                | E::Singular(_) => 2,
                _ => 1,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
