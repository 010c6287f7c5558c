use thiserror::Error;

/// Failure of a CLI command, carrying its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] edmpc::Error),
}

impl CliError {
    /// 1 usage or config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        use edmpc::Error as E;
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
            Self::Core(e) => match e {
                E::Config(_) | E::InvalidParameter(_) => 1,
                E::Numerical(_) | E::Leakage(_) => 3,
                _ => 2,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
