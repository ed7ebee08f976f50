use std::path::PathBuf;

use residual_core::Error as CoreError;

pub type Result<T, E = SolveError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("bound violated on {0} instance(s)")]
    BoundViolated(usize),
}

impl SolveError {
    /// 1 for usage, configuration, I/O and other runtime failures, 2 when
    /// an exhaustive operation hits its size guard, 3 for a bound violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            SolveError::Core(CoreError::DimensionTooLarge { .. }) => 2,
            SolveError::BoundViolated(_) | SolveError::Core(CoreError::BoundViolated { .. }) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| SolveError::Io { path, source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        SolveError::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
