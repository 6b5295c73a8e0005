use std::path::PathBuf;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} checks failed")]
    CheckFailed { failed: usize, total: usize },
    #[error(transparent)]
    Core(#[from] orlat_core::Error),
    #[error("cannot read config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use orlat_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::CheckFailed { .. } => EXIT_CHECK,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::InvalidOrientation(_) | E::InvalidQuadrature(_) | E::Unsupported(_) => {
                    EXIT_USAGE
                }
                E::DegenerateFit(_) => EXIT_CHECK,
                E::Overflow(_) | E::ResourceCap { .. } | E::Quadrature { .. } => EXIT_RESOURCE,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_RESOURCE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
