use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: prandtl_core::Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("usage error: {0}")]
    Usage(String),
}

impl LabError {
    /// Exit code of the command-line tool: 3 for configuration problems,
    /// 4 for everything else. Monitor failures are not errors; they come
    /// back as a scenario status.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parse(_) | LabError::Config(_) | LabError::Usage(_) => 3,
            LabError::Core { source, .. } => match source {
                prandtl_core::Error::Config(_) | prandtl_core::Error::Parameter(_) => 3,
                _ => 4,
            },
            LabError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for prandtl_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|source| LabError::Core { context: what.to_string(), source })
    }
}
