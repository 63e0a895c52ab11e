//! CLI error taxonomy mapped to process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unparseable or invalid configuration (exit code 2).
    #[error("config error: {0}")]
    Config(String),

    /// Physics, reconstruction or calibration failure (exit code 3).
    #[error("physics error: {0}")]
    Physics(String),

    /// Filesystem failure (exit code 4).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<opto_tomo_core::Error> for CliError {
    fn from(e: opto_tomo_core::Error) -> Self {
        use opto_tomo_core::Error as E;
        match &e {
            // Bad values reaching a core constructor are configuration
            // problems; everything else is a physics-level failure.
            E::Domain(_) | E::Unsatisfiable(_) => CliError::Config(e.to_string()),
            _ => CliError::Physics(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
