use std::path::PathBuf;

/// Errors from loading, writing and running.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Format {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fsdp_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: Option<u64>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// 1 for invalid input, 2 for infeasible or numerically failed runs.
    pub fn exit_code(&self) -> i32 {
        use fsdp_core::Error as E;
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Config(_) => 1,
            Error::Core(e) => match e {
                E::InvalidGrid(_)
                | E::InvalidParameter(_)
                | E::StageOutOfRange { .. }
                | E::NotOnGrid
                | E::NotAdditive
                | E::ShapeMismatch { .. }
                | E::EnumerationCap { .. }
                | E::TooLarge { .. } => 1,
                _ => 2,
            },
        }
    }
}
