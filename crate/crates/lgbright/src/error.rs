use std::path::PathBuf;

/// Failures of a CLI run, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("usage: {0}")]
    Usage(String),

    #[error("config file {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config file {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    /// A value is out of range. `key` is the dotted path of the offending entry.
    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("dispersion model {source_name}: {message}")]
    Model { source_name: String, message: String },

    #[error(transparent)]
    Compute(#[from] lgbright_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for computational and output failures, 2 for usage and config problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::ConfigRead { .. }
            | CliError::ConfigParse { .. }
            | CliError::ConfigValue { .. }
            | CliError::Model { .. } => 2,
            CliError::Compute(_) | CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
