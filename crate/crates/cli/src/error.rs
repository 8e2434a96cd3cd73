use thiserror::Error;
use xxz_core::Error as CoreError;

/// Failures of a run, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("configuration error: {0}")]
    Schema(String),
    /// The requested problem exceeds the configured size limits.
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::MissingArtifacts(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Numerical(_) | CliError::Io(_) => 4,
        }
    }

    /// Wraps a core error raised while validating inputs.
    pub fn validation(e: CoreError) -> Self {
        match e {
            CoreError::RegionTooLarge(..) | CoreError::EnumerationTooLarge(..) => {
                CliError::Resource(e.to_string())
            }
            _ => CliError::Schema(e.to_string()),
        }
    }

    /// Wraps a core error raised during compute, with context. Errors that reject the inputs
    /// keep the configuration status.
    pub fn compute(context: &str, e: CoreError) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            CoreError::RegionTooLarge(..) | CoreError::EnumerationTooLarge(..) => {
                CliError::Resource(msg)
            }
            CoreError::SiteNotInRegion(_)
            | CoreError::NotSubset(_)
            | CoreError::DuplicateSite(_)
            | CoreError::EmptyRegion(_)
            | CoreError::OutOfRange(_)
            | CoreError::InvalidParams(_)
            | CoreError::Precondition(_)
            | CoreError::InvalidDistribution(_) => CliError::Schema(msg),
            CoreError::IncompatibleBlocks
            | CoreError::NotHermitian(_)
            | CoreError::Singular(_)
            | CoreError::Numerical(_)
            | CoreError::InsufficientSamples(_)
            | CoreError::Unsupported(_) => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
