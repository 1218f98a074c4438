use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] fronthaul::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("verdict FAIL: {0}")]
    Verdict(String),
}

fn list(items: &[String]) -> String {
    items
        .iter()
        .map(|e| format!("  - {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(fronthaul::Error::Numeric { .. }) => 3,
            CliError::Core(fronthaul::Error::Io(_)) | CliError::Io { .. } => 1,
            CliError::Core(_) => 2,
            CliError::Verdict(_) => 4,
        }
    }
}
