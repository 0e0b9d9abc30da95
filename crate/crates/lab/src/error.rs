use chaoslab_core::Error as CoreError;

/// Errors surfaced by the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Bad flags, config or input files. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// A core routine failed while running. Exit code 1 unless the core
    /// error itself reports a bad argument.
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// A statistical check did not pass. Exit code 1.
    #[error("{0}")]
    Failed(String),
}

pub type LabResult<T> = Result<T, LabError>;

impl LabError {
    pub fn usage(msg: impl Into<String>) -> Self {
        LabError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) => 2,
            LabError::Core { source, .. } if is_usage(source) => 2,
            _ => 1,
        }
    }
}

fn is_usage(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::InvalidArgument { .. }
            | CoreError::OrderTooLarge { .. }
            | CoreError::MissingOrder { .. }
            | CoreError::ExponentRelation { .. }
            | CoreError::EmptySpectrum
            | CoreError::NonIntegrable { .. }
    )
}

/// Attaches context to core and IO errors.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> LabResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl Into<String>) -> LabResult<T> {
        self.map_err(|source| LabError::Core { context: what.into(), source })
    }
}

impl<T> Context<T> for Result<T, std::io::Error> {
    fn context(self, what: impl Into<String>) -> LabResult<T> {
        self.map_err(|source| LabError::Io { context: what.into(), source })
    }
}
